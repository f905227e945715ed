use traverse_core::partition::{build_partition, verify_partition, DiscretizedStratifiedSpace};

#[test]
fn halving_spacing_keeps_success() {
    for eps in [0.05, 0.3] {
        let coarse = DiscretizedStratifiedSpace::three_ray_plane(100, 0.02).unwrap();
        let fine = DiscretizedStratifiedSpace::three_ray_plane(200, 0.01).unwrap();
        let a = build_partition(&coarse, eps).unwrap();
        let b = build_partition(&fine, eps).unwrap();
        assert!(verify_partition(&coarse, &a).holds());
        assert!(verify_partition(&fine, &b).holds());
    }
}

#[test]
fn finer_grid_at_acceptance_epsilon() {
    let fine = DiscretizedStratifiedSpace::three_ray_plane(400, 0.005).unwrap();
    let p = build_partition(&fine, 0.05).unwrap();
    let check = verify_partition(&fine, &p);
    assert!(check.holds());
    assert!(check.offsets.iter().all(|&o| o < 0.05));
}
