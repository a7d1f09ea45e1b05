use std::collections::BTreeSet;

use num_complex::Complex64 as C;
use proptest::prelude::*;
use pshlab_core::conformal::DomainEmbedding;
use pshlab_core::surface::io::{mesh_to_string, parse_mesh};
use pshlab_core::surface::{build_genus2_octagon, build_torus, refine, validate, SurfaceGroup, Word};
use pshlab_core::Error;

fn canonical(t: [usize; 3]) -> [usize; 3] {
    let k = (0..3).min_by_key(|&k| t[k]).unwrap();
    [t[k], t[(k + 1) % 3], t[(k + 2) % 3]]
}

#[test]
fn refined_torus_is_the_doubled_grid() {
    for n in [3, 4] {
        let r = refine(&build_torus(n).unwrap());
        let fine = build_torus(2 * n).unwrap();
        validate(&r.child).unwrap();
        assert_eq!(r.child.mesh.num_vertices, fine.mesh.num_vertices);
        assert_eq!(r.child.mesh.num_faces(), fine.mesh.num_faces());

        // identify vertices through their positions on the square torus
        let emb = DomainEmbedding::torus(n, C::new(0.0, 1.0)).unwrap().refine(&r);
        let m = 2 * n as i64;
        let id: Vec<usize> = emb
            .positions
            .iter()
            .map(|p| {
                let i = (p.re * m as f64).round() as i64;
                let j = (p.im * m as f64).round() as i64;
                (i.rem_euclid(m) + m * j.rem_euclid(m)) as usize
            })
            .collect();
        assert_eq!(id.iter().collect::<BTreeSet<_>>().len(), id.len(), "vertex map is not injective");
        let mapped: BTreeSet<[usize; 3]> =
            r.child.mesh.faces.iter().map(|t| canonical([id[t[0]], id[t[1]], id[t[2]]])).collect();
        let direct: BTreeSet<[usize; 3]> = fine.mesh.faces.iter().map(|&t| canonical(t)).collect();
        assert_eq!(mapped, direct);
    }
}

#[test]
fn refinement_preserves_genus_and_quadruples_faces() {
    let coarse = build_genus2_octagon(0).unwrap();
    let fine = refine(&coarse).child;
    validate(&fine).unwrap();
    assert_eq!(fine.mesh.genus, 2);
    assert_eq!(fine.mesh.num_faces(), 4 * coarse.mesh.num_faces());
    assert_eq!(fine.mesh.euler_characteristic(), -2);
}

#[test]
fn mesh_documents_round_trip() {
    for lm in [build_torus(3).unwrap(), build_genus2_octagon(0).unwrap()] {
        let back = parse_mesh(&mesh_to_string(&lm)).unwrap();
        assert_eq!(back, lm);
    }
}

fn corrupt(edit: impl Fn(&mut serde_json::Value)) -> Result<(), Error> {
    let mut doc: serde_json::Value = serde_json::from_str(&mesh_to_string(&build_torus(3).unwrap())).unwrap();
    edit(&mut doc);
    parse_mesh(&doc.to_string()).map(|_| ())
}

#[test]
fn corrupt_meshes_are_rejected() {
    let cases: Vec<(&str, Box<dyn Fn(&mut serde_json::Value)>)> = vec![
        ("missing face", Box::new(|d| {
            d["faces"].as_array_mut().unwrap().pop();
        })),
        ("vertex out of range", Box::new(|d| d["faces"][0][0] = 99.into())),
        ("wrong genus", Box::new(|d| d["genus"] = 2.into())),
        ("duplicated face", Box::new(|d| {
            let f = d["faces"][0].clone();
            d["faces"][1] = f;
        })),
        ("reversed face", Box::new(|d| {
            let f: Vec<u64> = serde_json::from_value(d["faces"][0].clone()).unwrap();
            d["faces"][0] = serde_json::json!([f[0], f[2], f[1]]);
        })),
        ("one-sided crossing", Box::new(|d| d["crossings"]["0"] = "a".into())),
        ("unknown letter", Box::new(|d| d["crossings"]["0"] = "x".into())),
        ("crossing past the last halfedge", Box::new(|d| d["crossings"]["999"] = "a".into())),
        ("isolated vertex", Box::new(|d| d["vertices"] = 10.into())),
        ("not json", Box::new(|d| *d = serde_json::json!("garbage"))),
    ];
    for (what, edit) in cases {
        assert!(corrupt(edit).is_err(), "{what} accepted");
    }
    assert!(parse_mesh("{").is_err());
}

fn word(letters: usize) -> impl Strategy<Value = Word> {
    proptest::collection::vec(prop_oneof![1i8..=4, -4i8..=-1], 0..letters).prop_map(Word)
}

proptest! {
    #[test]
    fn words_times_inverse_are_trivial(w in word(12)) {
        let g = SurfaceGroup::new(2).unwrap();
        prop_assert!(w.mul(&w.inverse()).is_empty());
        prop_assert!(g.is_identity(&w.mul(&w.inverse())));
    }

    #[test]
    fn conjugated_relators_are_trivial(w in word(8), k in 0usize..8) {
        let g = SurfaceGroup::new(2).unwrap();
        let r = g.relator();
        let rotated = Word(r.0[k..].iter().chain(&r.0[..k]).copied().collect());
        let conj = w.mul(&rotated).mul(&w.inverse());
        prop_assert!(g.is_identity(&conj));
        prop_assert!(g.is_identity(&conj.inverse()));
    }

    #[test]
    fn nontrivial_short_words_are_detected(w in word(4)) {
        // words shorter than half the relator are trivial only if they reduce freely
        let g = SurfaceGroup::new(2).unwrap();
        prop_assert_eq!(g.is_identity(&w), w.reduced().is_empty());
    }
}
