use std::ffi::{CStr, CString};
use std::fs;
use std::path::PathBuf;
use std::process::Command;
use std::ptr;

use crossguard_ffi::*;

fn scenario_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../core/scenarios")
        .join(format!("{name}.toml"))
}

fn c_path(p: &std::path::Path) -> CString {
    CString::new(p.to_str().unwrap()).unwrap()
}

fn last_error() -> String {
    let p = cg_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

fn load(name: &str) -> *mut CgScenario {
    let mut s = ptr::null_mut();
    let status = unsafe { cg_scenario_load(c_path(&scenario_path(name)).as_ptr(), &mut s) };
    assert_eq!(status, CgStatus::Ok);
    s
}

#[test]
fn hazard_functions() {
    let zod = CgZod {
        anchor_x: 0.0,
        anchor_y: 0.0,
        ll: 30.0,
        rl: 30.0,
        uw: 0.0,
        lw: 30.0,
    };
    let bike = CgState {
        x: -50.0,
        y: -15.0,
        speed: 5.0,
        heading: 0.0,
    };
    let mut iv = CgInterval {
        kind: CgIntervalKind::Empty,
        entry: 0.0,
        exit: 0.0,
    };
    assert_eq!(
        unsafe { cg_incursion_interval(&zod, &bike, &mut iv) },
        CgStatus::Ok
    );
    assert_eq!(iv.kind, CgIntervalKind::Bounded);
    assert_eq!((iv.entry, iv.exit), (4.0, 16.0));

    let mut tag = CgHazardTag::Safe;
    assert_eq!(unsafe { cg_classify(&iv, 5.0, &mut tag) }, CgStatus::Ok);
    assert_eq!(tag, CgHazardTag::Imminent);
    assert_eq!(unsafe { cg_classify(&iv, 3.0, &mut tag) }, CgStatus::Ok);
    assert_eq!(tag, CgHazardTag::Safe);

    let bad = CgZod { lw: -1.0, ..zod };
    assert_eq!(
        unsafe { cg_incursion_interval(&bad, &bike, &mut iv) },
        CgStatus::InvalidArgument
    );
    assert!(!last_error().is_empty());
    assert_eq!(
        unsafe { cg_classify(&iv, 0.0, &mut tag) },
        CgStatus::InvalidArgument
    );
    assert_eq!(
        unsafe { cg_incursion_interval(ptr::null(), &bike, &mut iv) },
        CgStatus::NullPointer
    );
}

#[test]
fn cam_codec_through_the_boundary() {
    let cam = CgCam {
        station_id: 0,
        station_type: 1,
        latitude: 0.0,
        longitude: 0.0,
        speed: 0.0,
        heading: 0.0,
        generation_tick: 0,
    };
    let mut needed = 0;
    assert_eq!(
        unsafe { cg_cam_encode(&cam, ptr::null_mut(), 0, &mut needed) },
        CgStatus::BufferTooSmall
    );
    let mut buf = vec![0u8; needed];
    let mut written = 0;
    assert_eq!(
        unsafe { cg_cam_encode(&cam, buf.as_mut_ptr(), buf.len(), &mut written) },
        CgStatus::Ok
    );
    let golden =
        fs::read(PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../core/tests/golden/cam_zero.bin"))
            .unwrap();
    assert_eq!(buf, golden);

    let mut back = CgCam {
        station_type: 0,
        ..cam
    };
    assert_eq!(
        unsafe { cg_cam_decode(buf.as_ptr(), buf.len(), &mut back) },
        CgStatus::Ok
    );
    assert_eq!(back.station_type, 1);

    buf[24..32].copy_from_slice(&(-1.0f64).to_be_bytes());
    assert_eq!(
        unsafe { cg_cam_decode(buf.as_ptr(), buf.len(), &mut back) },
        CgStatus::CodecError
    );
    assert!(last_error().contains("24"), "{}", last_error());

    let bad_type = CgCam {
        station_type: 200,
        ..cam
    };
    assert_eq!(
        unsafe { cg_cam_encode(&bad_type, buf.as_mut_ptr(), buf.len(), &mut written) },
        CgStatus::InvalidArgument
    );
}

#[test]
fn scenario_and_simulation_handles() {
    let s = load("poc_kit_campus");
    let mut direct = CgMetrics {
        pedestrian_wait_ticks: 0,
        crossing_completed: false,
        denm_count: 0,
        denm_delivery_ratio: 0.0,
        has_min_distance: false,
        min_ped_vehicle_distance: 0.0,
        violations: 0,
    };
    assert_eq!(unsafe { cg_run(s, &mut direct) }, CgStatus::Ok);
    assert!(direct.crossing_completed);
    assert_eq!(direct.violations, 0);

    let mut sim = ptr::null_mut();
    assert_eq!(unsafe { cg_simulation_new(s, &mut sim) }, CgStatus::Ok);
    let mut finished = false;
    let mut phases = Vec::new();
    while !finished {
        assert_eq!(unsafe { cg_simulation_step(sim, &mut finished) }, CgStatus::Ok);
        let mut phase = CgPhase::Waiting;
        assert_eq!(unsafe { cg_simulation_phase(sim, &mut phase) }, CgStatus::Ok);
        if phases.last() != Some(&phase) {
            phases.push(phase);
        }
    }
    assert!(phases.contains(&CgPhase::ReactToHazard));
    let mut tick = 0;
    assert_eq!(unsafe { cg_simulation_tick(sim, &mut tick) }, CgStatus::Ok);
    assert!(tick > 0);

    let mut stepped = direct;
    assert_eq!(unsafe { cg_simulation_metrics(sim, &mut stepped) }, CgStatus::Ok);
    assert_eq!(stepped.pedestrian_wait_ticks, direct.pedestrian_wait_ticks);
    assert_eq!(stepped.denm_count, direct.denm_count);
    assert_eq!(stepped.min_ped_vehicle_distance, direct.min_ped_vehicle_distance);

    let dir = tempfile::tempdir().unwrap();
    let trace = dir.path().join("trace.jsonl");
    assert_eq!(
        unsafe { cg_simulation_write_trace(sim, c_path(&trace).as_ptr()) },
        CgStatus::Ok
    );
    let golden = fs::read(
        PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../core/tests/golden/poc_kit_campus.trace.jsonl"),
    )
    .unwrap();
    assert_eq!(fs::read(&trace).unwrap(), golden);

    unsafe {
        cg_simulation_free(sim);
        cg_scenario_set_seed(s, 9);
        cg_scenario_free(s);
        cg_scenario_free(ptr::null_mut());
        cg_simulation_free(ptr::null_mut());
    }
}

#[test]
fn scenario_errors_map_to_status_codes() {
    let mut s = ptr::null_mut();
    let missing = CString::new("/nonexistent/x.toml").unwrap();
    assert_eq!(
        unsafe { cg_scenario_load(missing.as_ptr(), &mut s) },
        CgStatus::IoError
    );
    let text = CString::new("name = 1").unwrap();
    assert_eq!(
        unsafe { cg_scenario_parse(text.as_ptr(), &mut s) },
        CgStatus::ParseError
    );
    assert!(last_error().contains("name"), "{}", last_error());
    assert!(s.is_null());
    assert_eq!(
        unsafe { cg_scenario_parse(ptr::null(), &mut s) },
        CgStatus::NullPointer
    );
}

#[test]
fn header_declares_every_export() {
    let header =
        fs::read_to_string(PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("include/crossguard.h")).unwrap();
    for symbol in [
        "cg_last_error",
        "cg_version",
        "cg_scenario_load",
        "cg_scenario_parse",
        "cg_scenario_set_seed",
        "cg_scenario_free",
        "cg_run",
        "cg_simulation_new",
        "cg_simulation_step",
        "cg_simulation_tick",
        "cg_simulation_phase",
        "cg_simulation_metrics",
        "cg_simulation_write_trace",
        "cg_simulation_free",
        "cg_incursion_interval",
        "cg_classify",
        "cg_cam_encode",
        "cg_cam_decode",
        "typedef struct CgScenario CgScenario",
        "typedef struct CgSimulation CgSimulation",
        "CG_STATUS_PANIC = 99",
    ] {
        assert!(header.contains(symbol), "header lacks {symbol}");
    }
}

#[test]
fn c_program_links_against_the_static_library() {
    let manifest = PathBuf::from(env!("CARGO_MANIFEST_DIR"));
    // integration test binaries live in <target>/<profile>/deps
    let profile_dir = std::env::current_exe()
        .unwrap()
        .parent()
        .unwrap()
        .parent()
        .unwrap()
        .to_path_buf();
    let lib = profile_dir.join("libcrossguard_ffi.a");
    assert!(lib.exists(), "{} not built", lib.display());
    let out = tempfile::tempdir().unwrap();
    let exe = out.path().join("smoke");
    let status = Command::new(std::env::var("CC").unwrap_or_else(|_| "cc".into()))
        .arg(manifest.join("tests/c/smoke.c"))
        .arg("-std=c99")
        .arg("-Wall")
        .arg("-Werror")
        .arg("-I")
        .arg(manifest.join("include"))
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&exe)
        .status()
        .expect("C compiler available");
    assert!(status.success());
    let run = Command::new(&exe)
        .arg(scenario_path("poc_kit_campus"))
        .output()
        .unwrap();
    assert!(run.status.success(), "{}", String::from_utf8_lossy(&run.stderr));
    assert!(String::from_utf8_lossy(&run.stdout).starts_with("ok 0.1.0"));
}
