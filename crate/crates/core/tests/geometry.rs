use approx::assert_relative_eq;
use num_complex::Complex64 as C;
use proptest::prelude::*;
use pshlab_core::hypgeom::{disk_centering, disk_rotation, disk_translation, Model};

fn disk_point() -> impl Strategy<Value = C> {
    (0.0..0.95f64, 0.0..std::f64::consts::TAU).prop_map(|(r, t)| C::from_polar(r, t))
}

fn plane_point() -> impl Strategy<Value = C> {
    (-5.0..5.0f64, -5.0..5.0f64).prop_map(|(x, y)| C::new(x, y))
}

fn vector() -> impl Strategy<Value = C> {
    (-2.0..2.0f64, -2.0..2.0f64).prop_map(|(x, y)| C::new(x, y))
}

fn complex_vector() -> impl Strategy<Value = [C; 2]> {
    (vector(), vector()).prop_map(|(a, b)| [a, b])
}

#[test]
fn closed_form_distances() {
    let d = Model::HyperbolicDisk;
    assert_relative_eq!(d.dist(C::new(0.0, 0.0), C::new(0.5, 0.0)), 3f64.ln(), epsilon = 1e-14);
    assert_relative_eq!(d.norm(C::new(0.0, 0.0), d.log(C::new(0.0, 0.0), C::new(0.5, 0.0))), 3f64.ln(), epsilon = 1e-14);
    assert_eq!(Model::Euclidean.dist(C::new(1.0, 2.0), C::new(4.0, 6.0)), 5.0);
}

proptest! {
    #[test]
    fn disk_exp_inverts_log(p in disk_point(), q in disk_point()) {
        let m = Model::HyperbolicDisk;
        let back = m.exp(p, m.log(p, q));
        prop_assert!((back - q).norm() < 1e-9 * (1.0 + m.dist(p, q)), "{back} vs {q}");
        prop_assert!((m.norm(p, m.log(p, q)) - m.dist(p, q)).abs() < 1e-9);
    }

    #[test]
    fn euclidean_exp_inverts_log(p in plane_point(), q in plane_point()) {
        let m = Model::Euclidean;
        prop_assert!((m.exp(p, m.log(p, q)) - q).norm() < 1e-12);
    }

    #[test]
    fn distance_is_isometry_invariant(p in disk_point(), q in disk_point(), c in disk_point(), theta in 0.0..6.3f64, s in -1.5..1.5f64) {
        let m = Model::HyperbolicDisk;
        let d = m.dist(p, q);
        for g in [disk_centering(c), disk_rotation(theta), disk_translation(s)] {
            prop_assert!((m.dist(g.apply(p), g.apply(q)) - d).abs() < 1e-8 * (1.0 + d));
        }
    }

    #[test]
    fn triangle_inequality(p in disk_point(), q in disk_point(), r in disk_point()) {
        let m = Model::HyperbolicDisk;
        prop_assert!(m.dist(p, r) <= m.dist(p, q) + m.dist(q, r) + 1e-10);
        prop_assert!((m.dist(p, q) - m.dist(q, p)).abs() < 1e-12);
    }

    #[test]
    fn transport_preserves_norm(p in disk_point(), q in disk_point(), v in vector()) {
        let m = Model::HyperbolicDisk;
        let w = m.transport(p, q, v);
        prop_assert!((m.norm(q, w) - m.norm(p, v)).abs() < 1e-9 * (1.0 + m.norm(p, v)));
    }

    #[test]
    fn hermitian_curvature_is_nonpositive(p in disk_point(), x in complex_vector(), y in complex_vector()) {
        let k = Model::HyperbolicDisk.hermitian_curvature(p, x, y);
        let scale = Model::HyperbolicDisk.scale(p).powi(4);
        let size: f64 = x.iter().chain(&y).map(|c| c.norm_sqr()).sum();
        prop_assert!(k <= 1e-12 * scale * size * size, "{k}");
        prop_assert_eq!(Model::Euclidean.hermitian_curvature(p, x, y), 0.0);
    }

    #[test]
    fn hermitian_curvature_vanishes_on_parallel_vectors(p in disk_point(), x in complex_vector(), l in vector()) {
        let y = [x[0] * l, x[1] * l];
        let k = Model::HyperbolicDisk.hermitian_curvature(p, x, y);
        let scale = Model::HyperbolicDisk.scale(p).powi(4);
        let size: f64 = x.iter().chain(&y).map(|c| c.norm_sqr()).sum();
        prop_assert!(k.abs() <= 1e-10 * scale * size * size, "{k}");
    }
}
