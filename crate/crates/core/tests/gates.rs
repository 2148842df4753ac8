//! Gate behaviour under simulation: truth tables in both engines,
//! reversibility, mode duality and composed circuits.

use osc_logic::gates::{
    build_majority, build_not, run_circuit, run_truth_table, simulate, Circuit, Engine, GateInstance, GateKind,
    GateParams, RunOptions, Wire,
};
use osc_logic::gates::{decode_bit, initial_phases, lock_reference};
use osc_logic::integrator::detect_lock;

const ENGINES: [Engine; 2] = [Engine::FullState, Engine::PhaseModel];

fn table(kind: GateKind, engine: Engine) -> Vec<Option<u8>> {
    let t = run_truth_table(&GateInstance::new("g", kind), engine, &RunOptions::default()).unwrap();
    assert!(t.all_passed(), "{}", t.to_text());
    t.observed()
}

#[test]
fn truth_tables_agree_across_engines() {
    for engine in ENGINES {
        assert_eq!(table(GateKind::Not, engine), vec![Some(1), Some(0)]);
        assert_eq!(table(GateKind::And, engine), vec![Some(0), Some(0), Some(0), Some(1)]);
        assert_eq!(table(GateKind::Or, engine), vec![Some(0), Some(1), Some(1), Some(1)]);
    }
}

/// Decoded bits of every node of `spec` after settling.
fn settle(spec: &osc_logic::dynamics::NetworkSpec, engine: Engine) -> Vec<u8> {
    let opts = RunOptions::default();
    let phases = initial_phases(spec.node_count(), opts.seed, 0);
    let traj = simulate(spec, engine, &phases, &opts).unwrap();
    let lock = detect_lock(&traj, lock_reference(spec), opts.lock_window, opts.lock_tol).unwrap();
    assert!(lock.locked, "residual {}", lock.residual);
    lock.phase_diffs.iter().map(|&p| decode_bit(p).unwrap()).collect()
}

#[test]
fn not_gate_is_reversible() {
    for engine in ENGINES {
        for bit in [0, 1] {
            let forward = GateInstance::new("n", GateKind::Not).netlist(&[bit]).unwrap();
            assert_eq!(settle(&forward, engine), vec![bit, 1 - bit]);
            let backward = GateInstance::new("n", GateKind::Not)
                .reversed()
                .netlist(&[bit])
                .unwrap();
            // nodes stay ordered (j, k); the drive now sits on k
            assert_eq!(settle(&backward, engine), vec![1 - bit, bit]);
        }
    }
}

#[test]
fn builders_match_documented_examples() {
    let p = GateParams::default_for(GateKind::Not);
    assert_eq!(settle(&build_not(p, 0).unwrap(), Engine::FullState)[1], 1);
    let and = GateParams::default_for(GateKind::And);
    let or = GateParams::default_for(GateKind::Or);
    assert_eq!(
        settle(&build_majority(GateKind::And, and, [1, 0]).unwrap(), Engine::FullState)[2],
        0
    );
    assert_eq!(
        settle(&build_majority(GateKind::Or, or, [1, 0]).unwrap(), Engine::FullState)[2],
        1
    );
    assert_eq!(
        settle(&build_majority(GateKind::And, and, [1, 1]).unwrap(), Engine::FullState),
        vec![1, 1, 1]
    );
}

#[test]
fn and_and_or_are_de_morgan_duals() {
    // OR(a, b) = NOT AND(NOT a, NOT b), read off the simulated tables
    for engine in ENGINES {
        let and = table(GateKind::And, engine);
        let or = table(GateKind::Or, engine);
        let rows = [[0, 0], [0, 1], [1, 0], [1, 1]];
        for (r, bits) in rows.iter().enumerate() {
            let flipped = rows.iter().position(|b| *b == [1 - bits[0], 1 - bits[1]]).unwrap();
            assert_eq!(or[r].map(|b| 1 - b), and[flipped]);
        }
    }
}

#[test]
fn majority_is_symmetric_in_its_inputs() {
    for kind in [GateKind::And, GateKind::Or] {
        for engine in ENGINES {
            let p = GateParams::default_for(kind);
            let a = settle(&build_majority(kind, p, [0, 1]).unwrap(), engine);
            let b = settle(&build_majority(kind, p, [1, 0]).unwrap(), engine);
            assert_eq!(a, vec![0, 1, b[2]]);
            assert_eq!(b, vec![1, 0, a[2]]);
        }
    }
}

#[test]
fn double_negation_is_identity() {
    let circuit = Circuit::new(
        vec![
            GateInstance::new("a", GateKind::Not),
            GateInstance::new("b", GateKind::Not),
        ],
        vec![Wire {
            from: 0,
            to: 1,
            input: 0,
        }],
    );
    for engine in ENGINES {
        let runs = run_circuit(&circuit, engine, &RunOptions::default()).unwrap();
        assert_eq!(runs.len(), 2);
        for run in &runs {
            assert!(run.passed(), "{run:?}");
            assert_eq!(run.observed, vec![Some(run.bits[0])]);
        }
    }
}

#[test]
fn and_into_not_is_nand() {
    let circuit = Circuit::new(
        vec![
            GateInstance::new("and", GateKind::And),
            GateInstance::new("not", GateKind::Not),
        ],
        vec![Wire {
            from: 0,
            to: 1,
            input: 0,
        }],
    );
    for engine in ENGINES {
        let runs = run_circuit(&circuit, engine, &RunOptions::default()).unwrap();
        let outputs: Vec<_> = runs.iter().map(|r| r.observed[0]).collect();
        assert_eq!(outputs, vec![Some(1), Some(1), Some(1), Some(0)], "{runs:?}");
        assert!(runs.iter().all(|r| r.passed()));
    }
}

#[test]
fn cyclic_wiring_is_rejected() {
    let circuit = Circuit::new(
        vec![
            GateInstance::new("a", GateKind::Not),
            GateInstance::new("b", GateKind::Not),
        ],
        vec![
            Wire {
                from: 0,
                to: 1,
                input: 0,
            },
            Wire {
                from: 1,
                to: 0,
                input: 0,
            },
        ],
    );
    assert!(matches!(
        run_circuit(&circuit, Engine::PhaseModel, &RunOptions::default()),
        Err(osc_logic::Error::Config(_))
    ));
}

#[test]
fn truth_tables_are_reproducible() {
    let gate = GateInstance::new("g", GateKind::Or);
    let opts = RunOptions::default();
    let mut a = Vec::new();
    let mut b = Vec::new();
    run_truth_table(&gate, Engine::FullState, &opts)
        .unwrap()
        .write_csv(&mut a)
        .unwrap();
    run_truth_table(&gate, Engine::FullState, &opts)
        .unwrap()
        .write_csv(&mut b)
        .unwrap();
    assert_eq!(a, b);
}
