use std::collections::BTreeMap;

use caving_damage::mesh::*;
use proptest::prelude::*;

fn reference() -> Mesh {
    build_mesh(Rect::new(-1500.0, 1500.0, -500.0, 500.0), 25.0, Split::Diagonal).unwrap()
}

fn shoelace(p: [[f64; 2]; 3]) -> f64 {
    0.5 * ((p[1][0] - p[0][0]) * (p[2][1] - p[0][1]) - (p[2][0] - p[0][0]) * (p[1][1] - p[0][1])).abs()
}

fn edge_use(mesh: &Mesh) -> BTreeMap<(usize, usize), usize> {
    let mut m = BTreeMap::new();
    for e in mesh.active_elements() {
        let t = mesh.triangles()[e];
        for k in 0..3 {
            let (a, b) = (t[k], t[(k + 1) % 3]);
            *m.entry((a.min(b), a.max(b))).or_insert(0) += 1;
        }
    }
    m
}

#[test]
fn unit_square_counts() {
    let m = build_mesh(Rect::new(0.0, 1.0, 0.0, 1.0), 0.5, Split::Diagonal).unwrap();
    assert_eq!(m.cells(), [2, 2]);
    assert_eq!(m.node_count(), 9);
    assert_eq!(m.element_count(), 8);
    let c = build_mesh(Rect::new(0.0, 1.0, 0.0, 1.0), 0.5, Split::Crossed).unwrap();
    assert_eq!(c.node_count(), 13);
    assert_eq!(c.element_count(), 16);
}

#[test]
fn reference_mesh_counts_and_tags() {
    let m = reference();
    assert_eq!(m.cells(), [120, 40]);
    assert_eq!(m.node_count(), 121 * 41);
    assert_eq!(m.element_count(), 2 * 120 * 40);
    let counts = m.edge_counts();
    assert_eq!(counts[&BoundaryTag::Lat], 80);
    assert_eq!(counts[&BoundaryTag::Up], 120);
    assert_eq!(counts[&BoundaryTag::Down], 120);
    assert!(!counts.contains_key(&BoundaryTag::Cav));
    for e in m.boundary() {
        let (p, q) = (m.nodes()[e.nodes[0]], m.nodes()[e.nodes[1]]);
        match e.tag {
            BoundaryTag::Lat => assert!(p[0].abs() == 1500.0 && q[0] == p[0]),
            BoundaryTag::Up => assert!(p[1] == 500.0 && q[1] == 500.0),
            BoundaryTag::Down => assert!(p[1] == -500.0 && q[1] == -500.0),
            BoundaryTag::Cav => unreachable!(),
        }
    }
}

#[test]
fn nodes_lie_in_closed_domain_and_areas_tile_it() {
    for split in [Split::Diagonal, Split::Crossed] {
        let m = build_mesh(Rect::new(-1500.0, 1500.0, -500.0, 500.0), 50.0, split).unwrap();
        for p in m.nodes() {
            assert!((-1500.0..=1500.0).contains(&p[0]) && (-500.0..=500.0).contains(&p[1]));
        }
        let total: f64 = (0..m.element_count()).map(|e| shoelace(m.element_coords(e))).sum();
        assert!((total - 3e6).abs() < 1e-6);
        assert!((m.active_area() - 3e6).abs() < 1e-6);
        let lumped: f64 = m.lumped_node_area().iter().sum();
        assert!((lumped - 3e6).abs() < 1e-6);
        for e in 0..m.element_count() {
            assert!((m.geometry(e).area - shoelace(m.element_coords(e))).abs() < 1e-9);
        }
    }
}

#[test]
fn mesh_is_conforming() {
    let m = reference();
    let uses = edge_use(&m);
    assert!(uses.values().all(|&n| n == 1 || n == 2));
    let boundary = uses.values().filter(|&&n| n == 1).count();
    assert_eq!(boundary, m.boundary().len());
    assert_eq!(boundary, 2 * 120 + 2 * 40);
}

#[test]
fn numbering_keeps_the_envelope_narrow() {
    let m = reference();
    let band = m
        .triangles()
        .iter()
        .flat_map(|t| [t[0].abs_diff(t[1]), t[1].abs_diff(t[2]), t[0].abs_diff(t[2])])
        .max()
        .unwrap();
    // one column of 41 nodes plus the diagonal
    assert_eq!(band, 42);
}

#[test]
fn carving_removes_exactly_the_centroids_inside() {
    let base = reference();
    let spec = CavitySpec::BLOCK_CAVING;
    for step in [0usize, 1, 3, 7, 15] {
        let m = carve_cavity(&base, step, &spec).unwrap();
        let r = Rect::new(-500.0, -500.0 + 40.0 * step as f64, -20.0, 20.0);
        let mut removed_area = 0.0;
        for e in 0..m.element_count() {
            let c = m.element_coords(e);
            let cx = (c[0][0] + c[1][0] + c[2][0]) / 3.0;
            let cy = (c[0][1] + c[1][1] + c[2][1]) / 3.0;
            let inside = cx > r.x_min && cx < r.x_max && cy > r.y_min && cy < r.y_max;
            assert_eq!(m.active()[e], !inside, "step {step}, element {e}");
            if inside {
                removed_area += shoelace(c);
            }
        }
        assert!((m.active_area() + removed_area - 3e6).abs() < 1e-6);
        if step == 0 {
            assert_eq!(m.active_element_count(), m.element_count());
        }
    }
}

#[test]
fn cavity_boundary_is_closed_and_interior() {
    let base = reference();
    let m = carve_cavity(&base, 15, &CavitySpec::BLOCK_CAVING).unwrap();
    let mut degree: BTreeMap<usize, usize> = BTreeMap::new();
    for e in m.boundary_edges(BoundaryTag::Cav) {
        for n in e.nodes {
            *degree.entry(n).or_insert(0) += 1;
            let p = m.nodes()[n];
            assert!(p[0] > -1500.0 && p[0] < 1500.0 && p[1] > -500.0 && p[1] < 500.0);
        }
    }
    assert!(!degree.is_empty());
    assert!(degree.values().all(|&d| d % 2 == 0));
    // outer tags are untouched
    let c = m.edge_counts();
    assert_eq!((c[&BoundaryTag::Lat], c[&BoundaryTag::Up], c[&BoundaryTag::Down]), (80, 120, 120));
    // the uncovered nodes are inactive
    let active = m.active_nodes();
    assert!(active.iter().filter(|&&a| !a).count() > 0);
}

#[test]
fn carving_is_monotone_and_idempotent() {
    let base = reference();
    let spec = CavitySpec::BLOCK_CAVING;
    let mut prev = base.clone();
    for step in 0..=15 {
        let next = carve_cavity(&prev, step, &spec).unwrap();
        assert!(next.active_element_count() <= prev.active_element_count());
        for e in 0..next.element_count() {
            assert!(!next.active()[e] || prev.active()[e]);
        }
        assert_eq!(carve_cavity(&next, step, &spec).unwrap(), next);
        assert_eq!(next, carve_cavity(&base, step, &spec).unwrap());
        prev = next;
    }
}

#[test]
fn invalid_inputs_are_rejected() {
    let d = Rect::new(0.0, 1.0, 0.0, 1.0);
    assert!(build_mesh(d, 0.0, Split::Diagonal).is_err());
    assert!(build_mesh(d, -1.0, Split::Diagonal).is_err());
    assert!(build_mesh(d, 2.0, Split::Diagonal).is_err());
    assert!(build_mesh(d, 0.8, Split::Diagonal).is_err());
    assert!(build_mesh(Rect::new(0.0, 0.0, 0.0, 1.0), 0.1, Split::Diagonal).is_err());
    // a cavity leaving the domain
    let base = reference();
    assert!(carve_cavity(&base, 60, &CavitySpec::BLOCK_CAVING).is_err());
    assert!(p1_geometry([[0.0, 0.0], [1.0, 1.0], [2.0, 2.0]]).is_err());
}

#[test]
fn p1_gradients_reproduce_linear_fields() {
    let p = [[0.3, -0.2], [2.0, 0.5], [0.7, 1.9]];
    let g = p1_geometry(p).unwrap();
    let f = |x: [f64; 2]| 3.0 * x[0] - 2.0 * x[1] + 1.0;
    let grad = (0..3).fold([0.0, 0.0], |acc, k| {
        [acc[0] + g.grads[k][0] * f(p[k]), acc[1] + g.grads[k][1] * f(p[k])]
    });
    assert!((grad[0] - 3.0).abs() < 1e-12 && (grad[1] + 2.0).abs() < 1e-12);
    // either orientation
    let rev = p1_geometry([p[0], p[2], p[1]]).unwrap();
    assert!((rev.area - g.area).abs() < 1e-15);
}

proptest! {
    #[test]
    fn area_is_preserved(w in 1.0f64..50.0, ht in 1.0f64..50.0, cells in 2usize..20, crossed in any::<bool>()) {
        let d = Rect::new(-w / 3.0, 2.0 * w / 3.0, -ht, 0.0);
        let h = w.min(ht) / cells as f64;
        let split = if crossed { Split::Crossed } else { Split::Diagonal };
        let m = build_mesh(d, h, split).unwrap();
        let total: f64 = (0..m.element_count()).map(|e| m.geometry(e).area).sum();
        prop_assert!((total - w * ht).abs() <= 1e-9 * w * ht);
        let uses = edge_use(&m);
        prop_assert!(uses.values().all(|&n| n == 1 || n == 2));
        let perimeter: f64 = m.boundary().iter().map(|e| {
            let (p, q) = (m.nodes()[e.nodes[0]], m.nodes()[e.nodes[1]]);
            ((p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2)).sqrt()
        }).sum();
        prop_assert!((perimeter - 2.0 * (w + ht)).abs() <= 1e-9 * (w + ht));
    }
}
