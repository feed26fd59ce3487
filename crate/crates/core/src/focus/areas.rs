use std::collections::BTreeMap;

use super::{build_caustic_points, distance_matrix, hdbscan, CausticPoint, FocusError, LrfConfig, TSearch};
use crate::assets::{CameraPose, FocusArea};
use crate::geometry::Vec3;

/// One area per cluster label: center is the mean caustic position, radius the mean
/// l-infinity distance from the center to the member camera origins. Areas are ranked by
/// member count, then by their sorted member ids, and truncated to `max_areas`.
pub fn focus_areas_from_clusters(
    labels: &[i64],
    points: &[CausticPoint],
    poses: &[CameraPose],
    max_areas: usize,
) -> Vec<FocusArea> {
    let origin_of: BTreeMap<&str, Vec3> = poses.iter().map(|p| (p.id.as_str(), p.origin)).collect();
    let mut groups: BTreeMap<i64, Vec<&CausticPoint>> = BTreeMap::new();
    for (l, p) in labels.iter().zip(points) {
        if *l >= 0 {
            groups.entry(*l).or_default().push(p);
        }
    }
    let mut areas: Vec<FocusArea> = groups
        .values()
        .filter_map(|members| {
            let k = members.len() as f64;
            let center = members.iter().fold(Vec3::zeros(), |acc, p| acc + p.position) / k;
            let radius = members
                .iter()
                .map(|p| {
                    let o = origin_of[p.camera_id.as_str()];
                    (center - o).amax()
                })
                .sum::<f64>()
                / k;
            if !(radius > 0.0) {
                return None;
            }
            let mut ids: Vec<String> = members.iter().map(|p| p.camera_id.clone()).collect();
            ids.sort();
            Some(FocusArea {
                center: center.into(),
                radius,
                members: ids,
                low_confidence: false,
            })
        })
        .collect();
    areas.sort_by(|a, b| b.members.len().cmp(&a.members.len()).then_with(|| a.members.cmp(&b.members)));
    areas.truncate(max_areas);
    areas
}

/// Full pipeline from poses to ranked focus areas.
///
/// Cameras whose best depth sits on an end of the search range show no ray concentration
/// and are left out of clustering. When more than half of the cameras are left out, the
/// returned areas are flagged low-confidence.
pub fn detect_focus_areas(poses: &[CameraPose], config: &LrfConfig) -> Result<Vec<FocusArea>, FocusError> {
    config.validate()?;
    if poses.len() < config.neighbors + 1 {
        return Err(FocusError::TooFewCameras {
            needed: config.neighbors + 1,
            found: poses.len(),
        });
    }
    let search = match config.t_search {
        Some(s) => s,
        None => TSearch::for_poses(poses)?,
    };
    let points = build_caustic_points(poses, config.neighbors, &search)?;
    let grid = search.grid();
    let (lo, hi) = (grid[0], grid[grid.len() - 1]);
    let kept: Vec<CausticPoint> = points.into_iter().filter(|p| p.depth > lo && p.depth < hi).collect();
    let dropped = poses.len() - kept.len();
    log::debug!("{} of {} cameras show a ray concentration", kept.len(), poses.len());
    if kept.len() < 2 || config.max_areas == 0 {
        return Ok(Vec::new());
    }
    let m = distance_matrix(&kept, config.alpha_deg.to_radians());
    let clustering = hdbscan(&m, kept.len(), config.min_cluster_size, config.single_cluster);
    let mut areas = focus_areas_from_clusters(&clustering.labels, &kept, poses, config.max_areas);
    if 2 * dropped > poses.len() {
        areas.iter_mut().for_each(|a| a.low_confidence = true);
    }
    Ok(areas)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cross() -> Vec<CameraPose> {
        [[1.0, 0.0, 0.0], [-1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, -1.0, 0.0]]
            .iter()
            .enumerate()
            .map(|(k, e)| CameraPose::look_at(format!("c{k}"), Vec3::from(*e), Vec3::zeros(), Vec3::z(), 60.0, 16, 16).unwrap())
            .collect()
    }

    fn at_origin(poses: &[CameraPose]) -> Vec<CausticPoint> {
        poses
            .iter()
            .map(|p| CausticPoint {
                position: Vec3::zeros(),
                depth: 1.0,
                camera_id: p.id.clone(),
            })
            .collect()
    }

    #[test]
    fn cross_rig_gives_unit_radius() {
        let poses = cross();
        let areas = focus_areas_from_clusters(&[0, 0, 0, 0], &at_origin(&poses), &poses, 5);
        assert_eq!(areas.len(), 1);
        assert_eq!(areas[0].center, [0.0; 3]);
        assert_eq!(areas[0].radius, 1.0);
        let cube = areas[0].cube();
        assert_eq!((cube.min, cube.max), ([-1.0; 3], [1.0; 3]));
    }

    #[test]
    fn noise_only_gives_nothing() {
        let poses = cross();
        assert!(focus_areas_from_clusters(&[-1; 4], &at_origin(&poses), &poses, 5).is_empty());
    }

    #[test]
    fn ranking_keeps_largest_clusters() {
        // 7 clusters of sizes 1..=7
        let mut poses = Vec::new();
        let mut labels = Vec::new();
        for c in 0..7i64 {
            for k in 0..=c {
                let eye = Vec3::new(c as f64 * 10.0 + 1.0, k as f64 * 0.01, 0.0);
                poses.push(CameraPose::look_at(format!("k{c}_{k}"), eye, Vec3::new(c as f64 * 10.0, 0.0, 0.0), Vec3::z(), 60.0, 16, 16).unwrap());
                labels.push(c);
            }
        }
        let pts: Vec<CausticPoint> = poses
            .iter()
            .zip(&labels)
            .map(|(p, &c)| CausticPoint {
                position: Vec3::new(c as f64 * 10.0, 0.0, 0.0),
                depth: 1.0,
                camera_id: p.id.clone(),
            })
            .collect();
        let areas = focus_areas_from_clusters(&labels, &pts, &poses, 5);
        let sizes: Vec<usize> = areas.iter().map(|a| a.members.len()).collect();
        assert_eq!(sizes, vec![7, 6, 5, 4, 3]);
    }
}
