use std::f64::consts::PI;

use lidar_gsa::pointcloud::{
    chamfer_to_target, encode_kitti, load_kitti_bin, mean_pairwise_distance, rotate_z, rotate_z_about, save_kitti_bin,
    translate, Point3, PointCloud,
};
use proptest::prelude::*;

/// Independent KITTI writer: x, y, z, intensity as little-endian f32.
fn reference_bytes(rows: &[[f32; 4]]) -> Vec<u8> {
    rows.iter().flat_map(|r| r.iter().flat_map(|v| v.to_le_bytes())).collect()
}

fn cloud_of(rows: &[[f32; 4]]) -> PointCloud {
    rows.iter()
        .map(|r| Point3::with_intensity(r[0] as f64, r[1] as f64, r[2] as f64, r[3] as f64))
        .collect()
}

#[test]
fn kitti_bytes_match_an_independent_writer() {
    let rows = [[1.5, -2.25, 0.125, 0.5], [-0.0, 1e-8, 3.4e38, 255.0], [7.0, 8.0, 9.0, 0.0]];
    assert_eq!(encode_kitti(&cloud_of(&rows)), reference_bytes(&rows));
}

#[test]
fn kitti_file_roundtrip_is_bit_exact() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("c.bin");
    let rows = [[0.1f32, 0.2, 0.3, 0.4], [-5.5, 6.25, -1.73, 1.0]];
    std::fs::write(&path, reference_bytes(&rows)).unwrap();
    let c = load_kitti_bin(&path).unwrap();
    assert_eq!(c, cloud_of(&rows));
    let again = dir.path().join("d.bin");
    save_kitti_bin(&c, &again).unwrap();
    assert_eq!(std::fs::read(&path).unwrap(), std::fs::read(&again).unwrap());
}

#[test]
fn empty_file_is_an_empty_cloud() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("e.bin");
    std::fs::write(&path, []).unwrap();
    assert!(load_kitti_bin(&path).unwrap().is_empty());
}

#[test]
fn quarter_turn_maps_x_to_y() {
    let c = cloud_of(&[[1.0, 0.0, 2.0, 0.3]]);
    let r = rotate_z(&c, PI / 2.0);
    let p = r.points[0];
    assert!(p.x.abs() < 1e-15 && (p.y - 1.0).abs() < 1e-15);
    assert_eq!((p.z, p.intensity), (2.0, c.points[0].intensity));
}

fn brute_chamfer(p: &PointCloud, t: &PointCloud) -> f64 {
    p.iter()
        .map(|a| t.iter().map(|b| a.distance(b)).fold(f64::INFINITY, f64::min))
        .sum::<f64>()
        / p.len() as f64
}

fn brute_pairwise(p: &PointCloud) -> f64 {
    let n = p.len();
    let mut s = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                s += p.points[i].distance(&p.points[j]);
            }
        }
    }
    if n < 2 {
        0.0
    } else {
        s / (n * (n - 1)) as f64
    }
}

fn arb_cloud(max: usize) -> impl Strategy<Value = PointCloud> {
    prop::collection::vec(prop::array::uniform3(-20.0f64..20.0), 1..max)
        .prop_map(|v| v.into_iter().map(|p| Point3::from_xyz(p, 0.5)).collect())
}

proptest! {
    #[test]
    fn rotation_is_an_isometry(c in arb_cloud(30), psi in -10.0f64..10.0, px in -5.0f64..5.0, py in -5.0f64..5.0) {
        let r = rotate_z_about(&c, [px, py, 0.0], psi);
        for i in 0..c.len() {
            prop_assert_eq!(r.points[i].z, c.points[i].z);
            prop_assert_eq!(r.points[i].intensity, c.points[i].intensity);
            for j in 0..c.len() {
                let d0 = c.points[i].distance(&c.points[j]);
                let d1 = r.points[i].distance(&r.points[j]);
                prop_assert!((d0 - d1).abs() <= 1e-9 * (1.0 + d0));
            }
        }
    }

    #[test]
    fn rotations_compose(c in arb_cloud(10), a in -3.0f64..3.0, b in -3.0f64..3.0) {
        let two = rotate_z(&rotate_z(&c, a), b);
        let one = rotate_z(&c, a + b);
        for (p, q) in two.iter().zip(one.iter()) {
            prop_assert!(p.distance(q) < 1e-9);
        }
    }

    #[test]
    fn translation_roundtrips(c in arb_cloud(10), d in prop::array::uniform3(-3.0f64..3.0)) {
        let back = translate(&translate(&c, d), d.map(|v| -v));
        for (p, q) in back.iter().zip(c.iter()) {
            prop_assert!(p.distance(q) < 1e-12);
        }
    }

    #[test]
    fn kitti_roundtrip(rows in prop::collection::vec(prop::array::uniform4(any::<f32>().prop_filter("finite", |v| v.is_finite())), 0..50)) {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("p.bin");
        let c = cloud_of(&rows);
        save_kitti_bin(&c, &path).unwrap();
        prop_assert_eq!(load_kitti_bin(&path).unwrap(), c);
    }

    #[test]
    fn chamfer_matches_brute_force(p in arb_cloud(15), t in arb_cloud(60)) {
        let fast = chamfer_to_target(&p, &t).unwrap();
        prop_assert!((fast - brute_chamfer(&p, &t)).abs() < 1e-9);
    }

    #[test]
    fn pairwise_matches_brute_force(p in arb_cloud(25)) {
        prop_assert!((mean_pairwise_distance(&p).unwrap() - brute_pairwise(&p)).abs() < 1e-9);
    }
}
