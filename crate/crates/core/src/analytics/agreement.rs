use std::collections::BTreeMap;

use serde::Serialize;

use super::StatsError;
use crate::annotation::{effective_units, HumeLabel, LabelKind, SentenceAnnotation};
use crate::ucca::{UccaCategory, UccaGraph};

/// Two annotators' labels on the same unit of the same translation.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LabelPair {
    pub sentence_id: String,
    pub translation_id: String,
    pub node_id: String,
    pub annotator_1: String,
    pub annotator_2: String,
    pub label_1: HumeLabel,
    pub label_2: HumeLabel,
    pub is_terminal: bool,
    pub categories: Vec<UccaCategory>,
    pub sentence_len: usize,
}

/// Pair up the effective units shared by every two annotators of a
/// translation. Annotators are ordered by id, so `label_1` always comes from
/// the lexicographically smaller annotator. A repeated (translation,
/// annotator) submission is ignored after the first.
pub fn build_label_pairs(
    graphs: &BTreeMap<String, UccaGraph>,
    annotations: &[SentenceAnnotation],
) -> Result<Vec<LabelPair>, StatsError> {
    let mut by_translation: BTreeMap<&str, BTreeMap<&str, &SentenceAnnotation>> = BTreeMap::new();
    for ann in annotations {
        by_translation
            .entry(ann.translation_id.as_str())
            .or_default()
            .entry(ann.annotator_id.as_str())
            .or_insert(ann);
    }

    let mut pairs = Vec::new();
    for group in by_translation.values() {
        let members: Vec<&SentenceAnnotation> = group.values().copied().collect();
        if members.len() < 2 {
            continue;
        }
        let graph = graphs
            .get(&members[0].sentence_id)
            .ok_or_else(|| StatsError::UnknownSentence(members[0].sentence_id.clone()))?;
        let effective = members
            .iter()
            .map(|a| effective_units(graph, a))
            .collect::<Result<Vec<_>, _>>()?;
        for i in 0..members.len() {
            for j in i + 1..members.len() {
                for (node, &label_1) in &effective[i] {
                    let Some(&label_2) = effective[j].get(node) else {
                        continue;
                    };
                    pairs.push(LabelPair {
                        sentence_id: graph.sentence_id().to_string(),
                        translation_id: members[i].translation_id.clone(),
                        node_id: node.clone(),
                        annotator_1: members[i].annotator_id.clone(),
                        annotator_2: members[j].annotator_id.clone(),
                        label_1,
                        label_2,
                        is_terminal: graph.is_terminal(node).expect("effective units exist"),
                        categories: graph
                            .parent_edges(node)
                            .expect("effective units exist")
                            .into_iter()
                            .map(|e| e.category.clone())
                            .collect(),
                        sentence_len: graph.len(),
                    });
                }
            }
        }
    }
    Ok(pairs)
}

/// Cohen's kappa over the pairs whose two labels both fall in `label_space`.
///
/// Computed from integer counts as `(n*agree - E) / (n^2 - E)` with
/// `E = sum_l c1[l] * c2[l]`, which equals `(po - pe) / (1 - pe)`.
pub fn cohens_kappa(pairs: &[LabelPair], label_space: &[HumeLabel]) -> Result<f64, StatsError> {
    kappa_of(
        pairs
            .iter()
            .map(|p| (p.label_1, p.label_2))
            .filter(|(a, b)| label_space.contains(a) && label_space.contains(b)),
    )
}

fn kappa_of(labels: impl Iterator<Item = (HumeLabel, HumeLabel)>) -> Result<f64, StatsError> {
    let mut first = [0i128; 5];
    let mut second = [0i128; 5];
    let mut agree = 0i128;
    let mut n = 0i128;
    for (a, b) in labels {
        first[a.ordinal()] += 1;
        second[b.ordinal()] += 1;
        if a == b {
            agree += 1;
        }
        n += 1;
    }
    if n == 0 {
        return Err(StatsError::EmptyPairs);
    }
    let chance: i128 = first.iter().zip(&second).map(|(a, b)| a * b).sum();
    if chance == n * n {
        return Err(StatsError::DegenerateKappa);
    }
    Ok((n * agree - chance) as f64 / (n * n - chance) as f64)
}

/// Pair count and kappa of one stratum. `kappa` is `None` when undefined.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Stratum {
    pub pairs: usize,
    pub kappa: Option<f64>,
}

impl Stratum {
    fn of(pairs: &[(HumeLabel, HumeLabel)]) -> Self {
        Self {
            pairs: pairs.len(),
            kappa: kappa_of(pairs.iter().copied()).ok(),
        }
    }

    fn present(pairs: &[(HumeLabel, HumeLabel)]) -> Option<Self> {
        (!pairs.is_empty()).then(|| Self::of(pairs))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KappaBreakdown {
    pub all: Stratum,
    pub atomic: Option<Stratum>,
    pub structural: Option<Stratum>,
    /// Pairs with one atomic and one structural label; counted only in `all`.
    pub cross_kind: usize,
}

struct Strata {
    all: Vec<(HumeLabel, HumeLabel)>,
    atomic: Vec<(HumeLabel, HumeLabel)>,
    structural: Vec<(HumeLabel, HumeLabel)>,
}

fn stratify<'a>(pairs: impl Iterator<Item = &'a LabelPair>) -> Strata {
    let mut s = Strata {
        all: Vec::new(),
        atomic: Vec::new(),
        structural: Vec::new(),
    };
    for p in pairs {
        let labels = (p.label_1, p.label_2);
        s.all.push(labels);
        match (p.label_1.kind(), p.label_2.kind()) {
            (LabelKind::Atomic, LabelKind::Atomic) => s.atomic.push(labels),
            (LabelKind::Structural, LabelKind::Structural) => s.structural.push(labels),
            _ => {}
        }
    }
    s
}

pub fn kappa_breakdown(pairs: &[LabelPair]) -> Result<KappaBreakdown, StatsError> {
    if pairs.is_empty() {
        return Err(StatsError::EmptyPairs);
    }
    let s = stratify(pairs.iter());
    Ok(KappaBreakdown {
        all: Stratum::of(&s.all),
        atomic: Stratum::present(&s.atomic),
        structural: Stratum::present(&s.structural),
        cross_kind: s.all.len() - s.atomic.len() - s.structural.len(),
    })
}

/// Counts indexed by `(label_1, label_2)` in G, O, R, A, B order.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct ConfusionMatrix {
    pub counts: [[u64; 5]; 5],
}

impl ConfusionMatrix {
    pub fn get(&self, first: HumeLabel, second: HumeLabel) -> u64 {
        self.counts[first.ordinal()][second.ordinal()]
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    pub fn row_marginals(&self) -> [u64; 5] {
        self.counts.map(|row| row.iter().sum())
    }

    pub fn column_marginals(&self) -> [u64; 5] {
        let mut out = [0; 5];
        for row in &self.counts {
            for (o, c) in out.iter_mut().zip(row) {
                *o += c;
            }
        }
        out
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::default();
        for i in 0..5 {
            for j in 0..5 {
                t.counts[j][i] = self.counts[i][j];
            }
        }
        t
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("annotator_1\\annotator_2,G,O,R,A,B\n");
        for label in HumeLabel::ALL {
            out.push(label.code());
            for c in &self.counts[label.ordinal()] {
                out.push_str(&format!(",{c}"));
            }
            out.push('\n');
        }
        out
    }
}

pub fn confusion_matrix(pairs: &[LabelPair]) -> ConfusionMatrix {
    let mut m = ConfusionMatrix::default();
    for p in pairs {
        m.counts[p.label_1.ordinal()][p.label_2.ordinal()] += 1;
    }
    m
}

/// Pairs whose sentence length lies in `[lower, upper)`; open ends are `None`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LengthBin {
    pub lower: Option<usize>,
    pub upper: Option<usize>,
    pub all: Stratum,
    pub atomic: Stratum,
    pub structural: Stratum,
}

/// Edges every 5 tokens up to `max_len`.
pub fn default_length_edges(max_len: usize) -> Vec<usize> {
    (5..=max_len.max(5)).step_by(5).collect()
}

/// Kappa per sentence-length bin. `edges` of length k give k + 1 bins.
pub fn kappa_by_length(pairs: &[LabelPair], edges: &[usize]) -> Result<Vec<LengthBin>, StatsError> {
    if edges.windows(2).any(|w| w[0] >= w[1]) {
        return Err(StatsError::BinEdges);
    }
    let mut buckets: Vec<Vec<&LabelPair>> = vec![Vec::new(); edges.len() + 1];
    for p in pairs {
        let bin = edges.partition_point(|&e| e <= p.sentence_len);
        buckets[bin].push(p);
    }
    Ok(buckets
        .into_iter()
        .enumerate()
        .map(|(i, bucket)| {
            let s = stratify(bucket.into_iter());
            LengthBin {
                lower: i.checked_sub(1).map(|j| edges[j]),
                upper: edges.get(i).copied(),
                all: Stratum::of(&s.all),
                atomic: Stratum::of(&s.atomic),
                structural: Stratum::of(&s.structural),
            }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use HumeLabel::*;

    fn pair(a: HumeLabel, b: HumeLabel, len: usize) -> LabelPair {
        LabelPair {
            sentence_id: format!("s{len}"),
            translation_id: format!("t{len}"),
            node_id: "n".into(),
            annotator_1: "x".into(),
            annotator_2: "y".into(),
            label_1: a,
            label_2: b,
            is_terminal: false,
            categories: vec![],
            sentence_len: len,
        }
    }

    fn pairs(labels: &[(HumeLabel, HumeLabel)]) -> Vec<LabelPair> {
        labels.iter().map(|&(a, b)| pair(a, b, 10)).collect()
    }

    #[test]
    fn kappa_anchors() {
        let same = pairs(&[(Green, Green), (Red, Red), (Adequate, Adequate), (Orange, Orange)]);
        assert_eq!(cohens_kappa(&same, &HumeLabel::ALL).unwrap(), 1.0);

        // po = 0.5; pe = 1.0 * 0.5 = 0.5.
        let half = pairs(&[(Green, Green), (Green, Red), (Green, Green), (Green, Red)]);
        assert_eq!(cohens_kappa(&half, &HumeLabel::ALL).unwrap(), 0.0);

        // po = 0; pe = 0.5 * 0.5 + 0.5 * 0.5 = 0.5.
        let opposite = pairs(&[(Green, Red), (Red, Green)]);
        assert_eq!(cohens_kappa(&opposite, &HumeLabel::ALL).unwrap(), -1.0);
    }

    #[test]
    fn kappa_errors() {
        assert_eq!(cohens_kappa(&[], &HumeLabel::ALL), Err(StatsError::EmptyPairs));
        let one_label = pairs(&[(Green, Green), (Green, Green)]);
        assert_eq!(cohens_kappa(&one_label, &HumeLabel::ALL), Err(StatsError::DegenerateKappa));
        let structural = pairs(&[(Adequate, Bad)]);
        assert_eq!(cohens_kappa(&structural, &HumeLabel::ATOMIC), Err(StatsError::EmptyPairs));
    }

    #[test]
    fn breakdown_strata() {
        let perfect = pairs(&[(Green, Green), (Red, Red), (Adequate, Adequate), (Bad, Bad)]);
        let b = kappa_breakdown(&perfect).unwrap();
        assert_eq!(b.all.kappa, Some(1.0));
        assert_eq!(b.atomic.unwrap().kappa, Some(1.0));
        assert_eq!(b.structural.unwrap().kappa, Some(1.0));

        let cross = pairs(&[(Green, Adequate), (Bad, Red)]);
        let b = kappa_breakdown(&cross).unwrap();
        assert_eq!(b.all.pairs, 2);
        assert_eq!(b.cross_kind, 2);
        assert!(b.atomic.is_none());
        assert!(b.structural.is_none());
        assert_eq!(kappa_breakdown(&[]), Err(StatsError::EmptyPairs));
    }

    #[test]
    fn confusion_counts() {
        let m = confusion_matrix(&pairs(&[(Green, Bad)]));
        assert_eq!(m.get(Green, Bad), 1);
        assert_eq!(m.total(), 1);

        let list = pairs(&[(Green, Bad), (Orange, Red), (Orange, Red), (Adequate, Adequate)]);
        let swapped: Vec<_> = list
            .iter()
            .map(|p| LabelPair { label_1: p.label_2, label_2: p.label_1, ..p.clone() })
            .collect();
        assert_eq!(confusion_matrix(&swapped), confusion_matrix(&list).transpose());
        let m = confusion_matrix(&list);
        assert_eq!(m.row_marginals(), [1, 2, 0, 1, 0]);
        assert_eq!(m.column_marginals(), [0, 0, 2, 1, 1]);
        assert!(m.to_csv().starts_with("annotator_1\\annotator_2,G,O,R,A,B\nG,0,0,0,0,1\n"));
    }

    #[test]
    fn length_bins() {
        let mut list = Vec::new();
        // lengths 5, 15, 25 with 2, 3 and 1 pairs respectively
        for (len, k) in [(5, 2), (15, 3), (25, 1)] {
            for i in 0..k {
                list.push(pair(if i % 2 == 0 { Green } else { Red }, Green, len));
            }
        }
        let bins = kappa_by_length(&list, &[10, 20]).unwrap();
        let counts: Vec<usize> = bins.iter().map(|b| b.all.pairs).collect();
        assert_eq!(counts, vec![2, 3, 1]);
        assert_eq!((bins[0].lower, bins[0].upper), (None, Some(10)));
        assert_eq!((bins[2].lower, bins[2].upper), (Some(20), None));
        // Single (G,G) pair: one label only, kappa absent.
        assert_eq!(bins[2].all.kappa, None);

        let single = kappa_by_length(&pairs(&[(Green, Red), (Red, Red)]), &[10, 11]).unwrap();
        assert_eq!(single[1].all.pairs, 2);
        assert_eq!(single[0].all.pairs + single[2].all.pairs, 0);

        assert_eq!(kappa_by_length(&list, &[10, 10]), Err(StatsError::BinEdges));
        assert_eq!(default_length_edges(23), vec![5, 10, 15, 20]);
    }

    #[test]
    fn identical_bins_have_equal_kappa() {
        let labels = [(Green, Red), (Green, Green), (Adequate, Bad), (Bad, Bad), (Orange, Green)];
        let mut list: Vec<_> = labels.iter().map(|&(a, b)| pair(a, b, 3)).collect();
        list.extend(labels.iter().map(|&(a, b)| pair(a, b, 30)));
        let bins = kappa_by_length(&list, &[10]).unwrap();
        assert_eq!(bins[0].all, bins[1].all);
        assert!(bins[0].all.kappa.is_some());
    }
}
