//! Property tests for the diagram layer: DSL round trips, canonical forms
//! under relabeling, and value preservation of path normalization.

use calabi_core::diagram::{
    parse, render_dsl, to_index_expression, BasicDiagram, DiagramSum, ExprMode, Leg, VertexLabel,
};
use calabi_core::geometry::{evaluate_basic_diagram, evaluate_diagram};
use calabi_core::instances::{InstanceSpec, PotentialInstance};
use calabi_core::Error;
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const FREE: [char; 4] = ['i', 'j', 'k', 'l'];
const DUMMY: [char; 12] = ['a', 'b', 'c', 'd', 'e', 'f', 'g', 'm', 'p', 'q', 'r', 's'];

/// A random contraction pattern: factor labels and, per factor, the index
/// letters in slot order.
#[derive(Clone, Debug)]
struct Pattern {
    labels: Vec<VertexLabel>,
    slots: Vec<Vec<char>>,
}

fn label(k: u8) -> VertexLabel {
    match k % 4 {
        0 | 1 => VertexLabel::Phi,
        2 => VertexLabel::V,
        _ => VertexLabel::W,
    }
}

fn name(l: VertexLabel) -> &'static str {
    match l {
        VertexLabel::Phi => "Phi",
        VertexLabel::V => "V",
        VertexLabel::W => "W",
    }
}

fn pattern(factors: &[(u8, u8)], free: usize, seed: u64) -> Pattern {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let labels: Vec<VertexLabel> = factors.iter().map(|f| label(f.0)).collect();
    let mut owners: Vec<usize> = factors
        .iter()
        .enumerate()
        .flat_map(|(v, f)| std::iter::repeat_n(v, f.1 as usize))
        .collect();
    let total = owners.len();
    let mut free = free.min(total).min(FREE.len());
    if (total - free) % 2 == 1 {
        free = if free < total.min(FREE.len()) {
            free + 1
        } else {
            free - 1
        };
    }
    owners.shuffle(&mut rng);
    let mut slots = vec![Vec::new(); factors.len()];
    for (k, &v) in owners.iter().take(free).enumerate() {
        slots[v].push(FREE[k]);
    }
    for (pair, chunk) in owners[free..].chunks(2).enumerate() {
        slots[chunk[0]].push(DUMMY[pair]);
        slots[chunk[1]].push(DUMMY[pair]);
    }
    for s in &mut slots {
        s.shuffle(&mut rng);
    }
    Pattern { labels, slots }
}

impl Pattern {
    fn text(&self) -> String {
        self.labels
            .iter()
            .zip(&self.slots)
            .map(|(l, s)| {
                format!(
                    "{}({})",
                    name(*l),
                    s.iter()
                        .map(|c| c.to_string())
                        .collect::<Vec<_>>()
                        .join(",")
                )
            })
            .collect::<Vec<_>>()
            .join("*")
    }

    /// Same tensor written differently: factors reordered, slots permuted
    /// within factors, dummy letters renamed.
    fn shuffled(&self, seed: u64) -> Pattern {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut order: Vec<usize> = (0..self.labels.len()).collect();
        order.shuffle(&mut rng);
        let mut renamed = DUMMY.to_vec();
        renamed.shuffle(&mut rng);
        let map = |c: char| match DUMMY.iter().position(|&d| d == c) {
            Some(p) => renamed[p],
            None => c,
        };
        Pattern {
            labels: order.iter().map(|&v| self.labels[v]).collect(),
            slots: order
                .iter()
                .map(|&v| {
                    let mut s: Vec<char> = self.slots[v].iter().map(|&c| map(c)).collect();
                    s.shuffle(&mut rng);
                    s
                })
                .collect(),
        }
    }

    /// Free labels permuted.
    fn permuted_free(&self, seed: u64) -> Pattern {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut perm = FREE.to_vec();
        perm.shuffle(&mut rng);
        let map = |c: char| match FREE.iter().position(|&d| d == c) {
            Some(p) => perm[p],
            None => c,
        };
        Pattern {
            labels: self.labels.clone(),
            slots: self
                .slots
                .iter()
                .map(|s| s.iter().map(|&c| map(c)).collect())
                .collect(),
        }
    }

    /// The raw multigraph, in factor order, without any normalization.
    fn raw(&self) -> BasicDiagram {
        let mut edges = Vec::new();
        let mut legs = Vec::new();
        let mut seen: Vec<(char, usize)> = Vec::new();
        for (v, s) in self.slots.iter().enumerate() {
            for &c in s {
                if FREE.contains(&c) {
                    legs.push(Leg {
                        vertex: v,
                        label: Some(c),
                    });
                } else if let Some(p) = seen.iter().position(|e| e.0 == c) {
                    edges.push((seen.remove(p).1, v));
                } else {
                    seen.push((c, v));
                }
            }
        }
        BasicDiagram::new(self.labels.clone(), edges, legs).expect("valid raw diagram")
    }
}

fn factors() -> impl Strategy<Value = Vec<(u8, u8)>> {
    prop::collection::vec((0u8..4, 1u8..=4), 1..=4).prop_filter("at most 8 legs", |f| {
        f.iter().map(|x| x.1 as usize).sum::<usize>() <= 8
    })
}

fn instances() -> Vec<PotentialInstance> {
    [
        "quadratic_id2",
        "manufactured(2,42)",
        "orthant2",
        "sine1d(1)",
        "gauss_pair_1d(0.5)",
    ]
    .iter()
    .map(|n| InstanceSpec::from_name(n).and_then(|s| s.build()).unwrap())
    .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(96))]

    #[test]
    fn render_then_parse_is_identity(f in factors(), free in 0usize..4, seed in any::<u64>()) {
        let p = pattern(&f, free, seed);
        let s = parse(&p.text()).unwrap();
        let back = parse(&render_dsl(&s).unwrap()).unwrap();
        prop_assert_eq!(&back, &s);
        let sym = s.delabel();
        prop_assert_eq!(parse(&render_dsl(&sym).unwrap()).unwrap().delabel(), sym);
    }

    #[test]
    fn canonical_form_ignores_presentation(f in factors(), free in 0usize..4, seed in any::<u64>(), s2 in any::<u64>()) {
        let p = pattern(&f, free, seed);
        let a = parse(&p.text()).unwrap();
        let b = parse(&p.shuffled(s2).text()).unwrap();
        prop_assert_eq!(&a, &b);
        for (d, _) in a.iter() {
            prop_assert_eq!(&d.canonical(), d);
        }
        prop_assert_eq!(p.raw().canonical(), p.raw().canonical().canonical());
    }

    #[test]
    fn unlabeled_forms_forget_free_letters(f in factors(), free in 0usize..4, seed in any::<u64>(), s2 in any::<u64>()) {
        let p = pattern(&f, free, seed);
        let q = p.permuted_free(s2);
        let a = parse(&p.text()).unwrap();
        let b = parse(&q.text()).unwrap();
        prop_assert_eq!(a.delabel(), b.delabel());
        let ea = to_index_expression(&a, ExprMode::Symmetric).unwrap();
        let eb = to_index_expression(&b, ExprMode::Symmetric).unwrap();
        prop_assert_eq!(ea, eb);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn normalization_preserves_values(f in factors(), free in 0usize..3, seed in any::<u64>()) {
        let p = pattern(&f, free, seed);
        let raw = p.raw();
        let normal = DiagramSum::from_diagram(raw.clone());
        for inst in instances() {
            for x in inst.sample(2, seed) {
                let before = match evaluate_basic_diagram(&raw, &inst, &x) {
                    Err(Error::MissingOrder { .. }) => continue,
                    r => r.unwrap(),
                };
                let after = evaluate_diagram(&normal, &inst, &x).unwrap();
                let scale = 1.0 + before.max_abs();
                for (u, v) in before.data.iter().zip(&after.data) {
                    prop_assert!((u - v).abs() <= 1e-10 * scale, "{} on {}: {} vs {}", p.text(), inst.name, u, v);
                }
            }
        }
    }
}
