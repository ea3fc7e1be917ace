use onetwo::hexlattice::*;
use proptest::prelude::*;
use std::collections::HashMap;

fn orient(a: (i64, i64), b: (i64, i64), c: (i64, i64)) -> i64 {
    ((b.0 - a.0) * (c.1 - a.1) - (b.1 - a.1) * (c.0 - a.0)).signum()
}

fn crosses(p: (i64, i64), q: (i64, i64), r: (i64, i64), s: (i64, i64)) -> bool {
    if p == r || p == s || q == r || q == s {
        return false;
    }
    orient(p, q, r) * orient(p, q, s) < 0 && orient(r, s, p) * orient(r, s, q) < 0
}

fn check_region(g: &HexGraph, faces: usize) {
    g.validate().unwrap();
    assert_eq!(g.faces.len(), faces);
    // each internal edge lies on one or two region faces
    let mut on: HashMap<usize, usize> = HashMap::new();
    for f in &g.faces {
        let es: Vec<usize> = f.edges.iter().map(|e| e.unwrap()).collect();
        let mut dedup = es.clone();
        dedup.sort();
        dedup.dedup();
        assert_eq!(dedup.len(), 6);
        for e in es {
            *on.entry(e).or_default() += 1;
        }
        // class sequence is (H, NWSE, NESW) repeated up to rotation and reflection
        let cls: Vec<EdgeClass> = f.edges.iter().map(|e| g.edges[e.unwrap()].class).collect();
        for i in 0..6 {
            assert_eq!(cls[i], cls[(i + 3) % 6]);
            assert_ne!(cls[i], cls[(i + 1) % 6]);
        }
        // closed walk
        for i in 0..6 {
            let e = &g.edges[f.edges[i].unwrap()];
            assert!(e.ends.contains(&f.corners[i]) && e.ends.contains(&f.corners[(i + 1) % 6]));
        }
    }
    for &e in &g.internal {
        let c = on.get(&e).copied().unwrap_or(0);
        assert!(c == 1 || c == 2, "edge {e} on {c} faces");
    }
    // three distinct classes at every vertex
    for v in 0..g.n_vertices() {
        for s in 0..3 {
            assert_eq!(g.edges[g.incident[v][s]].class.slot(), s);
        }
    }
    // straight-line planarity
    for i in 0..g.n_edges() {
        for j in i + 1..g.n_edges() {
            let (a, b) = (g.edges[i].ends, g.edges[j].ends);
            assert!(!crosses(vertex_xy(a[0]), vertex_xy(a[1]), vertex_xy(b[0]), vertex_xy(b[1])));
        }
    }
    // incidence graph: three angles per vertex
    let inc = incidence_graph(g);
    assert_eq!(inc.angle_face.len(), g.n_vertices());
    for v in 0..g.n_vertices() {
        let mut fs = inc.angle_face[v].to_vec();
        fs.sort();
        fs.dedup();
        assert_eq!(fs.len(), 3);
    }
}

#[test]
fn single_hexagon() {
    let g = build_box(1, 1).unwrap();
    assert_eq!(g.n_vertices(), 6);
    assert_eq!(g.internal.len(), 6);
    assert_eq!(g.boundary.len(), 6);
    check_region(&g, 1);
}

#[test]
fn square_matches_box() {
    for n in 1..=3 {
        let a = build_box(n, n).unwrap();
        let b = build_square(n).unwrap();
        assert_eq!(a.vertices, b.vertices);
        assert_eq!(a.edges, b.edges);
        assert_eq!(a.faces, b.faces);
    }
}

#[test]
fn json_is_deterministic() {
    let g = build_box(2, 2).unwrap();
    let a = serde_json::to_string(&g.to_json()).unwrap();
    let b = serde_json::to_string(&build_box(2, 2).unwrap().to_json()).unwrap();
    assert_eq!(a, b);
    let v = g.to_json();
    for key in ["vertices", "edges", "faces", "topology", "boundary"] {
        assert!(v.get(key).is_some(), "missing {key}");
    }
    let mut sorted = g.vertices.clone();
    sorted.sort();
    assert_eq!(sorted, g.vertices);
}

#[test]
fn cylinder_wraps() {
    let g = build_cylinder(3, 1).unwrap();
    g.validate().unwrap();
    assert_eq!(g.topology, Topology::Cylinder);
    assert!(g.x_period().is_some());
    assert_eq!(g.faces.len(), 3);
    let ring = build_cylinder(3, 0).unwrap();
    assert_eq!(ring.n_vertices(), 6);
}

#[test]
fn parse_specs() {
    assert_eq!(parse_lattice("box:2,3").unwrap().faces.len(), 6);
    assert_eq!(parse_lattice("square:2").unwrap().faces.len(), 4);
    assert_eq!(parse_lattice("cylinder:3,1").unwrap().topology, Topology::Cylinder);
    assert!(parse_lattice("torus:2").is_err());
    assert!(parse_lattice("box:0,2").is_err());
}

#[test]
fn neighbours_are_symmetric() {
    for p in -3..3 {
        for q in -3..3 {
            let v = VertexId::new(p, q);
            for u in lattice_neighbours(v) {
                assert!(lattice_neighbours(u).contains(&v));
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]
    #[test]
    fn boxes_are_well_formed(k in 1u32..4, n in 1u32..4) {
        let g = build_box(k, n).unwrap();
        check_region(&g, (k * n) as usize);
        for &e in &g.boundary {
            prop_assert!(g.edges[e].is_boundary());
        }
    }
}
