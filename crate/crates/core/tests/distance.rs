use planadapt::seed::stream;
use planadapt::{
    build_graph, distance_field, load_maze, oracle_distance, DistanceEstimator, MazeWorld,
    OracleSession, Point,
};
use proptest::prelude::*;

const DOOR_MAP: &str = "#####\n#.#.#\n#.#.#\n#...#\n#####\n";

/// Thin wall between two rooms, joined by a door along the bottom.
const TWO_ROOMS: &str = "\
#########
#...#...#
#...#...#
#...#...#
#...#...#
#...#...#
#.......#
#########
";

/// Floyd–Warshall over the sub-cell graph: 8-connected, diagonal moves need
/// both adjacent axis cells free.
fn exhaustive_grid(world: &MazeWorld, res: usize) -> (usize, Vec<f64>, f64) {
    let rows = world.rows() * res;
    let cols = world.cols() * res;
    let step = 1.0 / res as f64;
    let free = |r: isize, c: isize| {
        r >= 0
            && c >= 0
            && (r as usize) < rows
            && (c as usize) < cols
            && !world.is_wall_cell(r / res as isize, c / res as isize)
    };
    let n = rows * cols;
    let mut d = vec![f64::INFINITY; n * n];
    for r in 0..rows as isize {
        for c in 0..cols as isize {
            if !free(r, c) {
                continue;
            }
            let i = r as usize * cols + c as usize;
            d[i * n + i] = 0.0;
            for dr in -1..=1isize {
                for dc in -1..=1isize {
                    if (dr, dc) == (0, 0) || !free(r + dr, c + dc) {
                        continue;
                    }
                    let diagonal = dr != 0 && dc != 0;
                    if diagonal && !(free(r + dr, c) && free(r, c + dc)) {
                        continue;
                    }
                    let j = (r + dr) as usize * cols + (c + dc) as usize;
                    d[i * n + j] = if diagonal { 2f64.sqrt() * step } else { step };
                }
            }
        }
    }
    for k in 0..n {
        for i in 0..n {
            let dik = d[i * n + k];
            if !dik.is_finite() {
                continue;
            }
            for j in 0..n {
                let alt = dik + d[k * n + j];
                if alt < d[i * n + j] {
                    d[i * n + j] = alt;
                }
            }
        }
    }
    (cols, d, step)
}

#[test]
fn door_map_matches_hand_polyline() {
    let w = load_maze(DOOR_MAP).unwrap();
    // Down two cells, across two, up two: no diagonal can cut the wall's foot.
    let d = oracle_distance(&w, Point::new(1.5, 1.5), Point::new(3.5, 1.5), 1).unwrap();
    assert_eq!(d, Some(6.0));
}

#[test]
fn door_map_matches_exhaustive_search() {
    let w = load_maze(DOOR_MAP).unwrap();
    for res in [1usize, 2, 3] {
        let (cols, table, step) = exhaustive_grid(&w, res);
        let n = table.len().isqrt();
        let centre = |i: usize| {
            Point::new((i % cols) as f64 * step + step / 2.0, (i / cols) as f64 * step + step / 2.0)
        };
        let mut session = OracleSession::new(&w, res as u32);
        for i in 0..n {
            let a = centre(i);
            if !w.is_free(a) {
                continue;
            }
            for j in 0..n {
                let b = centre(j);
                if !w.is_free(b) {
                    continue;
                }
                let expected = table[i * n + j].max(a.dist(b));
                let got = session.distance(a, b).unwrap().unwrap();
                assert!((got - expected).abs() < 1e-9, "res {res}: {a} -> {b}: {got} vs {expected}");
            }
        }
    }
}

#[test]
fn field_matches_pairwise_on_door_map() {
    let w = load_maze(DOOR_MAP).unwrap();
    let src = Point::new(1.25, 1.75);
    let f = distance_field(&w, src, 4).unwrap();
    let mut session = OracleSession::new(&w, 4);
    for r in 0..f.rows() {
        for c in 0..f.cols() {
            let q = f.cell_center(r, c);
            if !w.is_free(q) {
                assert!(f.at(r, c).is_infinite());
                continue;
            }
            let pairwise = session.distance(src, q).unwrap();
            match pairwise {
                Some(d) => assert_eq!(f.at(r, c), d),
                None => assert!(f.at(r, c).is_infinite()),
            }
        }
    }
}

#[test]
fn unreachable_is_none() {
    let w = load_maze("#####\n#.#.#\n#####\n").unwrap();
    let d = oracle_distance(&w, Point::new(1.5, 1.5), Point::new(3.5, 1.5), 4).unwrap();
    assert_eq!(d, None);
}

#[test]
fn wall_piercing_two_room_fixture() {
    let w = load_maze(TWO_ROOMS).unwrap();
    let a = Point::new(3.5, 1.5);
    let b = Point::new(5.5, 1.5);
    let oracle = oracle_distance(&w, a, b, 4).unwrap().unwrap();
    assert!(oracle > 5.0 * a.dist(b), "fixture must make the detour long: {oracle}");

    let est = DistanceEstimator::wall_piercing(1.0, 10.0).unwrap();
    let mut rng = stream(0, &[]);
    assert_eq!(est.estimate(&w, a, b, &mut rng).unwrap(), Some(2.0));

    // The planner then joins the two sides with a false edge.
    let mut session = est.session(&w);
    let g = planadapt::PlanningGraph::connect(&mut session, &est, vec![a, b], 3.0, &mut rng)
        .unwrap();
    assert_eq!(g.edges().collect::<Vec<_>>(), vec![(0, 1, 2.0)]);
    let honest = DistanceEstimator::oracle();
    let mut session = honest.session(&w);
    let g = planadapt::PlanningGraph::connect(&mut session, &honest, vec![a, b], 3.0, &mut rng)
        .unwrap();
    assert_eq!(g.edge_count(), 0);
}

#[test]
fn wall_piercing_is_stable_per_pair() {
    let w = MazeWorld::default_maze();
    let est = DistanceEstimator::wall_piercing(0.5, 10.0).unwrap();
    let mut rng = stream(3, &[]);
    for _ in 0..50 {
        let a = w.sample_free(&mut rng).unwrap();
        let b = w.sample_free(&mut rng).unwrap();
        let first = est.estimate(&w, a, b, &mut rng).unwrap();
        for _ in 0..3 {
            assert_eq!(est.estimate(&w, a, b, &mut rng).unwrap(), first);
            assert_eq!(est.estimate(&w, b, a, &mut rng).unwrap(), first);
        }
        assert_eq!(est.is_pierced(a, b), est.is_pierced(b, a));
    }
}

#[test]
fn scaling_preserves_nearest_candidate() {
    let w = MazeWorld::default_maze();
    let oracle = DistanceEstimator::oracle();
    let scaled = DistanceEstimator::scaled(1.7).unwrap();
    let mut rng = stream(9, &[]);
    for _ in 0..20 {
        let s = w.sample_free(&mut rng).unwrap();
        let candidates: Vec<Point> = (0..8).map(|_| w.sample_free(&mut rng).unwrap()).collect();
        let argmin = |est: &DistanceEstimator, rng: &mut _| {
            let mut best = (f64::INFINITY, usize::MAX);
            for (i, &q) in candidates.iter().enumerate() {
                let d = est.estimate(&w, s, q, rng).unwrap().unwrap();
                if d < best.0 {
                    best = (d, i);
                }
            }
            best.1
        };
        assert_eq!(argmin(&oracle, &mut rng), argmin(&scaled, &mut rng));
    }
}

#[test]
fn bigger_cutoff_only_adds_edges() {
    let w = MazeWorld::default_maze();
    let est = DistanceEstimator::oracle();
    for (lo, hi) in [(2.0, 3.0), (3.0, 5.0), (5.0, 8.0)] {
        let small = build_graph(&w, &est, 60.0, lo, &mut stream(4, &[])).unwrap();
        let large = build_graph(&w, &est, 60.0, hi, &mut stream(4, &[])).unwrap();
        assert_eq!(small.waypoints(), large.waypoints());
        let big: Vec<_> = large.edges().collect();
        for edge in small.edges() {
            assert!(big.contains(&edge));
        }
    }
}

fn free_point(world: &MazeWorld) -> impl Strategy<Value = Point> + '_ {
    (1.0..world.width() - 1.0, 1.0..world.height() - 1.0)
        .prop_map(|(x, y)| Point::new(x, y))
        .prop_filter("point must be free", |p| world.is_free(*p))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn oracle_is_symmetric(a in free_point(default()), b in free_point(default())) {
        let w = default();
        let ab = oracle_distance(w, a, b, 4).unwrap();
        let ba = oracle_distance(w, b, a, 4).unwrap();
        prop_assert_eq!(ab, ba);
    }

    #[test]
    fn oracle_bounded_by_straight_line(a in free_point(default()), b in free_point(default())) {
        let w = default();
        let d = oracle_distance(w, a, b, 4).unwrap().unwrap();
        prop_assert!(d >= a.dist(b));
        if a == b {
            prop_assert_eq!(d, 0.0);
        }
    }

    #[test]
    fn oracle_triangle(
        a in free_point(default()),
        b in free_point(default()),
        c in free_point(default()),
    ) {
        let w = default();
        let mut s = OracleSession::new(w, 4);
        let ab = s.distance(a, b).unwrap().unwrap();
        let bc = s.distance(b, c).unwrap().unwrap();
        let ac = s.distance(a, c).unwrap().unwrap();
        prop_assert!(ac <= ab + bc + 2.0 * s.grid_step());
    }
}

fn default() -> &'static MazeWorld {
    static WORLD: std::sync::OnceLock<MazeWorld> = std::sync::OnceLock::new();
    WORLD.get_or_init(MazeWorld::default_maze)
}
