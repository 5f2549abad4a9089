//! Merging of own-sensor detections with objects reported over CPM.

use super::{Cpm, PerceivedObject};
use crate::geom::{GeoRef, Point};

/// Objects of the same type closer than this are treated as one.
pub const MERGE_RADIUS_M: f64 = 2.0;

struct Cluster {
    members: Vec<PerceivedObject>,
}

impl Cluster {
    fn accepts(&self, o: &PerceivedObject) -> bool {
        self.members[0].object_type == o.object_type
            && self
                .members
                .iter()
                .any(|m| m.rel_position.distance(o.rel_position) <= MERGE_RADIUS_M)
    }

    fn merged(self) -> PerceivedObject {
        if self.members.len() == 1 {
            return self.members.into_iter().next().expect("non-empty");
        }
        let total: f64 = self.members.iter().map(|m| m.confidence).sum();
        let weight = |m: &PerceivedObject| {
            if total > 0.0 {
                m.confidence / total
            } else {
                1.0 / self.members.len() as f64
            }
        };
        let (mut x, mut y, mut speed) = (0.0, 0.0, 0.0);
        for m in &self.members {
            let w = weight(m);
            x += w * m.rel_position.x;
            y += w * m.rel_position.y;
            speed += w * m.speed;
        }
        // heading and type come from the most confident member; earlier (own) members win ties
        let best =
            self.members.iter().fold(
                &self.members[0],
                |b, m| if m.confidence > b.confidence { m } else { b },
            );
        PerceivedObject {
            rel_position: Point::new(x, y),
            speed: speed.max(0.0),
            heading: best.heading,
            object_type: best.object_type,
            confidence: best.confidence,
        }
    }
}

/// Fuses own detections with received CPM objects into one list.
///
/// Own objects are given relative to `self_pos`, CPM objects relative to the
/// sender's origin. The output is expressed in the local frame of `geo_ref`,
/// i.e. `rel_position` is measured from the frame origin. CPMs whose origin
/// cannot be projected are skipped.
pub fn fuse_perception(
    own: &[PerceivedObject],
    received: &[Cpm],
    self_pos: Point,
    geo_ref: &GeoRef,
) -> Vec<PerceivedObject> {
    let own_local = own.iter().map(|o| PerceivedObject {
        rel_position: self_pos.offset(o.rel_position.x, o.rel_position.y),
        ..o.clone()
    });
    let remote_local = received.iter().flat_map(|cpm| {
        let origin = geo_ref.to_local(cpm.origin_latitude, cpm.origin_longitude).ok();
        cpm.objects.iter().filter_map(move |o| {
            let origin = origin?;
            Some(PerceivedObject {
                rel_position: origin.offset(o.rel_position.x, o.rel_position.y),
                ..o.clone()
            })
        })
    });

    let mut clusters: Vec<Cluster> = Vec::new();
    for obj in own_local.chain(remote_local) {
        match clusters.iter_mut().find(|c| c.accepts(&obj)) {
            Some(c) => c.members.push(obj),
            None => clusters.push(Cluster { members: vec![obj] }),
        }
    }
    clusters.into_iter().map(Cluster::merged).collect()
}
