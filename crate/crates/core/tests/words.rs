//! Replays sampled walks at the amplitude level and checks that the state at
//! every node is the reduced word applied to the initial state.

use num_complex::Complex64;
use proptest::prelude::*;
use qrewind::mat2::{anticommutator, check_proportional, commutator, haar_unitary, Mat2};
use qrewind::qgate::{apply_q, evolve_free, PureState};
use qrewind::walk::{node_word, step_node, Direction, WalkNode, WordDescriptor};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn word_matrix(word: WordDescriptor, x: &Mat2, y: &Mat2) -> Mat2 {
    match word {
        WordDescriptor::YPow(n) => y.pow(n),
        WordDescriptor::XYPow(n) => *x * y.pow(n),
    }
}

/// `a ∝ b` as vectors, judged on the normalised states.
fn parallel(a: &PureState, b: &PureState) -> bool {
    let (a, b) = (a.normalized().unwrap(), b.normalized().unwrap());
    (a.fidelity(&b) - 1.0).abs() < 1e-9
}

fn as_column(psi: &PureState) -> Mat2 {
    let [a, b] = psi.amplitudes();
    let z = Complex64::new(0.0, 0.0);
    Mat2::new(a, z, b, z)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn every_phase_one_state_is_its_word(seed in any::<u64>(), p_vert in 0.2f64..0.8, s in 0u64..8) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (v, w) = (haar_unitary(&mut rng), haar_unitary(&mut rng));
        let (x, y) = (commutator(&v, &w), anticommutator(&v, &w));
        let psi0 = PureState::haar(&mut rng);

        // follow a random branch choice (not the Born rule) so long words show up
        let mut state = psi0;
        let mut node = WalkNode::ORIGIN;
        let mut moves = Vec::new();
        while node != WalkNode::TARGET && moves.len() < 40 {
            let dir = if rng.random::<f64>() < p_vert { Direction::Vertical } else { Direction::Horizontal };
            let b = apply_q(&v, &w, &state);
            state = match dir {
                Direction::Vertical => b.vertical,
                Direction::Horizontal => b.horizontal,
            };
            if state.norm_sqr() < 1e-20 {
                return Ok(());
            }
            state = state.normalized().unwrap();
            node = step_node(node, dir);
            moves.push(dir);
            let word = node_word(node, &moves).unwrap();
            prop_assert_eq!(word.node(), node);
            let expect = psi0.apply(&word_matrix(word, &x, &y));
            prop_assert!(parallel(&state, &expect), "node {:?} word {:?}", node, word);
        }
        if node != WalkNode::TARGET {
            return Ok(());
        }
        prop_assert_eq!(node_word(node, &moves).unwrap(), WordDescriptor::XYPow(0));

        // phase two: wait, then walk back to the origin
        state = evolve_free(&w, s, &state).unwrap();
        let mut steps = 0;
        while node != WalkNode::ORIGIN && steps < 200 {
            let dir = if rng.random::<f64>() < p_vert { Direction::Vertical } else { Direction::Horizontal };
            let b = apply_q(&v, &w, &state);
            let next = match dir {
                Direction::Vertical => b.vertical,
                Direction::Horizontal => b.horizontal,
            };
            if next.norm_sqr() < 1e-20 {
                return Ok(());
            }
            state = next.normalized().unwrap();
            node = step_node(node, dir);
            steps += 1;
        }
        if node == WalkNode::ORIGIN {
            let rewound = psi0.apply(&w.adjoint().pow(s));
            prop_assert!(parallel(&state, &rewound));
        }
    }

    #[test]
    fn commutator_word_maps_states_like_matrices(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (v, w) = (haar_unitary(&mut rng), haar_unitary(&mut rng));
        let psi = PureState::haar(&mut rng);
        let b = apply_q(&v, &w, &psi);
        // the gate's vertical port is (WV − VW)/2, i.e. −x/2
        let col = as_column(&psi);
        let direct = commutator(&w, &v) * col;
        let port = as_column(&b.vertical).scale(Complex64::new(2.0, 0.0));
        prop_assert!(check_proportional(&port, &direct, 1e-12).verdict);
        prop_assert!((port - direct).frobenius_norm() < 1e-12);
    }
}

#[test]
fn words_off_the_graph_are_rejected() {
    use Direction::*;
    assert!(node_word(WalkNode::TARGET, &[Vertical, Vertical, Vertical]).is_err());
    // upper row at position 0 only reachable from below or from the right
    assert!(node_word(WalkNode::new(qrewind::walk::Row::Upper, -1), &[Vertical, Horizontal]).is_err());
    assert_eq!(
        node_word(WalkNode::TARGET, &[Horizontal, Horizontal, Vertical, Horizontal, Horizontal]).unwrap(),
        WordDescriptor::XYPow(0)
    );
}
