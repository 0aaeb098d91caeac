use quasilin::radial::{shoot, ShootOptions};
use quasilin::solver2d::{solve, Field2D};
use quasilin::{make_grid, ConvexDomain, ProblemSpec};

fn solved(spec: &ProblemSpec, domain: &ConvexDomain, h: f64) -> Field2D {
    solve(spec, &make_grid(domain, h).unwrap())
        .unwrap()
        .into_field()
        .expect("solver converges")
}

fn radial_u_min(spec: &ProblemSpec, radius: f64) -> f64 {
    shoot(spec, 2, radius, ShootOptions::default())
        .unwrap()
        .into_solution()
        .unwrap()
        .u_min()
}

fn mirror_gap(field: &Field2D) -> f64 {
    let grid = &field.grid;
    let mut gap: f64 = 0.0;
    for (k, n) in grid.nodes.iter().enumerate() {
        for (i, j) in [(-n.i, n.j), (n.i, -n.j), (-n.i, -n.j)] {
            let m = grid.index(i, j).expect("symmetric lattice");
            gap = gap.max((field.values[k] - field.values[m]).abs());
        }
    }
    gap
}

#[test]
fn euclidean_disk_converges_at_second_order() {
    let spec = ProblemSpec::euclidean(2);
    let disk = ConvexDomain::disk(1.0).unwrap();
    let exact = radial_u_min(&spec, 1.0);
    let errors: Vec<f64> = [1.0 / 16.0, 1.0 / 32.0, 1.0 / 64.0]
        .iter()
        .map(|&h| (solved(&spec, &disk, h).u_min().0 - exact).abs())
        .collect();
    for pair in errors.windows(2) {
        let factor = pair[0] / pair[1];
        assert!(
            (3.2..=4.8).contains(&factor),
            "factor {factor}, errors {errors:?}"
        );
    }
}

#[test]
fn solutions_are_negative_and_symmetric() {
    let spec = ProblemSpec::euclidean(2);
    for domain in [
        ConvexDomain::disk(1.0).unwrap(),
        ConvexDomain::ellipse(2.0, 1.0).unwrap(),
    ] {
        let field = solved(&spec, &domain, 1.0 / 16.0);
        assert!(field.values.iter().all(|&u| u < 0.0));
        assert!(
            mirror_gap(&field) <= 1e-9,
            "{domain}: {}",
            mirror_gap(&field)
        );
    }
}

#[test]
fn newton_converges_quadratically() {
    let field = solved(
        &ProblemSpec::euclidean(2),
        &ConvexDomain::ellipse(2.0, 1.0).unwrap(),
        1.0 / 16.0,
    );
    let last: Vec<f64> = field
        .log
        .iter()
        .filter(|e| e.lambda == 1.0)
        .map(|e| e.residual_norm)
        .collect();
    assert!(last.len() >= 2);
    let n = last.len();
    assert!(last[n - 1] <= 1e-10);
    assert!(
        last[n - 2] / last[n - 1].max(f64::MIN_POSITIVE) >= 10.0,
        "{last:?}"
    );
}

#[test]
fn lorentzian_disk_matches_radial_profile() {
    let spec = ProblemSpec::lorentzian(2);
    let radius = 0.3;
    let exact = radial_u_min(&spec, radius);
    let coarse = (solved(&spec, &ConvexDomain::disk(radius).unwrap(), radius / 16.0)
        .u_min()
        .0
        - exact)
        .abs();
    let fine = (solved(&spec, &ConvexDomain::disk(radius).unwrap(), radius / 32.0)
        .u_min()
        .0
        - exact)
        .abs();
    assert!(fine <= 1e-5, "{fine}");
    assert!(fine < coarse);
}

#[test]
fn mirror_symmetric_blob_keeps_symmetry() {
    // cos 2θ is even in both axes
    let field = solved(
        &ProblemSpec::euclidean(2),
        &ConvexDomain::blob(1.0, 0.1, 2).unwrap(),
        1.0 / 16.0,
    );
    assert!(field.grid.domain.centroid()[0].abs() <= 1e-12);
    assert!(mirror_gap(&field) <= 1e-9);
}
