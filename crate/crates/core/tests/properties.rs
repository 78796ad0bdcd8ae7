use std::io::Write;

use num_complex::Complex64;
use proptest::prelude::*;

use qdp_core::accountant::{BudgetLedger, Source};
use qdp_core::dataset::{load_dataset, neighbors, Attribute, Dataset, Schema};
use qdp_core::direct::account_direct;
use qdp_core::gate::Gate;
use qdp_core::noise::{compose_depolarizing, DepolarizingSpec};
use qdp_core::qotp::{decrypt, encrypt, PauliKey};
use qdp_core::query::{compile_circuit, parse_query, Cmp, Node, PredicateQuery};
use qdp_core::state::SparseState;

fn census_schema() -> Schema {
    Schema::new(vec![
        Attribute::with_labels("age", 2, [("Child", 0), ("Adult", 1)]),
        Attribute::with_labels("marital", 2, [("Single", 0), ("Married", 1), ("Divorced", 2)]),
        Attribute::new("score", 3),
    ])
    .unwrap()
}

fn gate_strategy(qubits: usize) -> impl Strategy<Value = Gate> {
    (0..9u8, 0..qubits, 0..qubits, 0..qubits).prop_filter_map("distinct qubits", move |(kind, a, b, c)| {
        Some(match kind {
            0 => Gate::X(a),
            1 => Gate::Z(a),
            2 => Gate::H(a),
            3 => Gate::S(a),
            4 => Gate::Sdg(a),
            5 => Gate::T(a),
            6 => Gate::Tdg(a),
            7 if a != b => Gate::Cnot { control: a, target: b },
            8 if a != b && b != c && a != c => Gate::Toffoli { c1: a, c2: b, target: c },
            _ => return None,
        })
    })
}

fn query_strategy() -> impl Strategy<Value = Node> {
    let leaf = (0..3usize, 0..4u8, 0..8u64).prop_map(|(attr, op, v)| {
        let value = match attr {
            0 => v % 2,
            1 => v % 3,
            _ => v,
        };
        let cmp = [Cmp::Eq, Cmp::Neq, Cmp::Leq, Cmp::Geq][op as usize];
        Node::leaf(attr, cmp, value)
    });
    leaf.prop_recursive(3, 12, 3, |inner| {
        prop_oneof![
            prop::collection::vec(inner.clone(), 2..4).prop_map(Node::And),
            prop::collection::vec(inner, 2..4).prop_map(Node::Or),
        ]
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn csv_round_trip(rows in prop::collection::vec((0..2usize, 0..3usize, 0..8u64), 1..20)) {
        let schema = census_schema();
        let ages = ["Child", "Adult"];
        let marital = ["Single", "Married", "Divorced"];
        let mut file = tempfile::NamedTempFile::new().unwrap();
        writeln!(file, "age,marital,score").unwrap();
        let cells: Vec<Vec<String>> = rows
            .iter()
            .map(|&(a, m, s)| vec![ages[a].to_string(), marital[m].to_string(), format!("{s:03b}")])
            .collect();
        for c in &cells {
            writeln!(file, "{}", c.join(",")).unwrap();
        }
        file.flush().unwrap();
        let d = load_dataset(file.path(), &schema).unwrap();
        prop_assert_eq!(d.n(), rows.len());
        for (i, c) in cells.iter().enumerate() {
            prop_assert_eq!(&d.decode_row(i), c);
        }
        let mut seen = std::collections::HashSet::new();
        prop_assert!(d.rows().iter().all(|r| seen.insert(*r)));
    }

    #[test]
    fn neighbours_differ_in_one_row(payload in prop::collection::vec(0..3u64, 1..5)) {
        let schema = Schema::new(vec![Attribute::with_labels("m", 2, [("A", 0), ("B", 1), ("C", 2)])]).unwrap();
        let d = Dataset::new(schema, payload.iter().map(|v| vec![*v]).collect()).unwrap();
        let mut count = 0;
        for nb in neighbors(&d) {
            count += 1;
            let diff = (0..d.n()).filter(|&i| d.rows()[i] != nb.rows()[i]).count();
            prop_assert_eq!(diff, 1);
        }
        prop_assert_eq!(count, 2 * d.n());
    }

    #[test]
    fn circuits_preserve_norm(
        seed_amps in prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 64),
        gates in prop::collection::vec(gate_strategy(6), 50),
    ) {
        let norm = seed_amps.iter().map(|(r, i)| r * r + i * i).sum::<f64>().sqrt();
        prop_assume!(norm > 1e-3);
        let s = SparseState::from_amplitudes(
            6,
            seed_amps.iter().enumerate().map(|(k, (r, i))| (k as u128, Complex64::new(*r, *i) / norm)),
        ).unwrap();
        let out = s.apply_circuit(&gates).unwrap();
        prop_assert!((out.norm_sqr() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn compiled_queries_match(root in query_strategy()) {
        let schema = census_schema();
        let q = PredicateQuery::new(root);
        let c = compile_circuit(&q, &schema);
        prop_assert!(c.is_well_formed());
        for row in 0..1u128 << schema.row_width() {
            prop_assert_eq!(c.evaluate(row), q.eval_row(&schema, row));
        }
        let text = q.display(&schema).to_string();
        prop_assert_eq!(parse_query(&text, &schema).unwrap(), q);
    }

    #[test]
    fn ledger_totals_are_order_free(
        entries in prop::collection::vec((0.0f64..2.0, 0.0f64..0.01), 0..12),
        rotate in 0usize..12,
    ) {
        let build = |es: &[(f64, f64)]| {
            let mut l = BudgetLedger::new();
            for (i, (e, d)) in es.iter().enumerate() {
                l.record(format!("entry{i}"), *e, *d, Source::Direct).unwrap();
            }
            l.totals()
        };
        let mut shuffled = entries.clone();
        if !shuffled.is_empty() {
            let k = rotate % shuffled.len();
            shuffled.rotate_left(k);
            shuffled.reverse();
        }
        let (a, b) = (build(&entries), build(&shuffled));
        prop_assert!((a.epsilon - b.epsilon).abs() < 1e-12);
        prop_assert!((a.delta - b.delta).abs() < 1e-15);
    }

    #[test]
    fn depolarizing_composition_is_order_free(probs in prop::collection::vec(0.0f64..=1.0, 0..8)) {
        let mut rev = probs.clone();
        rev.reverse();
        let a = compose_depolarizing(&DepolarizingSpec::new(probs, 4).unwrap());
        let b = compose_depolarizing(&DepolarizingSpec::new(rev, 4).unwrap());
        prop_assert!((a - b).abs() < 1e-15);
    }

    #[test]
    fn pad_round_trip(bits in prop::collection::vec(any::<(bool, bool)>(), 4), index in 0u128..16) {
        let key = PauliKey::new(bits.iter().map(|b| b.0).collect(), bits.iter().map(|b| b.1).collect());
        let s = SparseState::basis(4, index).unwrap().apply(&Gate::H(0)).unwrap().apply(&Gate::T(0)).unwrap();
        let back = decrypt(&encrypt(&s, &key).unwrap(), &key).unwrap();
        prop_assert!((back.fidelity(&s) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn delta_decreases_with_k(n in 2u64..10_000, t in 1u64..400) {
        let mut prev = account_direct(n, t, 0, 1.0).1;
        for k in 1..=t.min(12) {
            let (eps, delta) = account_direct(n, t, k, 1.0);
            prop_assert!(eps >= 0.0);
            prop_assert!(delta <= prev);
            prev = delta;
        }
    }
}
