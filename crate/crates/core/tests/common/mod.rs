#![allow(dead_code)]

use ecgweak::classifier::BeatVector;
use ecgweak::ingest::BeatClass;
use ecgweak::labelmodel::{fit_pooled, posterior, FitConfig, LabelModelParams};
use ecgweak::lfs::{LfConfig, LfMatrix, Vote};
use ecgweak::pipeline::{label_records, process_records, record_beat_vectors, PreprocessConfig};
use ecgweak::synth::{generate_corpus, CorpusConfig};
use ecgweak::Execution;

/// Packs 12-bit samples (two per three bytes) the way format 212 stores
/// them. An odd count leaves the final byte zero.
pub fn encode_212(samples: &[i32]) -> Vec<u8> {
    let mut out = Vec::with_capacity(samples.len().div_ceil(2) * 3);
    for pair in samples.chunks(2) {
        let a = (pair[0] & 0x0FFF) as u16;
        let b = pair.get(1).map_or(0, |&v| (v & 0x0FFF) as u16);
        out.push((a & 0xFF) as u8);
        out.push((((a >> 8) & 0x0F) | ((b >> 8) << 4)) as u8);
        if pair.len() == 2 {
            out.push((b & 0xFF) as u8);
        }
    }
    out
}

pub fn ann_word(code: u16, increment: u16) -> Vec<u8> {
    ((code << 10) | increment).to_le_bytes().to_vec()
}

pub fn ann_skip(interval: i32) -> Vec<u8> {
    let v = interval as u32;
    let mut out = ann_word(59, 0);
    out.extend(((v >> 16) as u16).to_le_bytes());
    out.extend(((v & 0xFFFF) as u16).to_le_bytes());
    out
}

pub fn ann_aux(payload: &[u8]) -> Vec<u8> {
    let mut out = ann_word(63, payload.len() as u16);
    out.extend(payload);
    if payload.len() % 2 == 1 {
        out.push(0);
    }
    out
}

fn log_sum_exp(v: &[f64]) -> f64 {
    let m = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    m + v.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

fn score(params: &LabelModelParams, y: i8, row: &[i8]) -> f64 {
    row.iter()
        .enumerate()
        .map(|(k, &l)| {
            let agree = if l == y { params.theta_acc[k] } else { 0.0 };
            let voted = if l != 0 { params.theta_lab[k] } else { 0.0 };
            agree + voted
        })
        .sum()
}

/// Every vote row over `m` LFs, in base-3 order.
pub fn all_rows(m: usize) -> Vec<Vec<i8>> {
    let mut rows = vec![vec![]];
    for _ in 0..m {
        rows = rows
            .into_iter()
            .flat_map(|r| {
                [-1i8, 0, 1].into_iter().map(move |v| {
                    let mut r = r.clone();
                    r.push(v);
                    r
                })
            })
            .collect();
    }
    rows
}

pub fn brute_log_partition(params: &LabelModelParams) -> f64 {
    let mut terms = Vec::new();
    for row in all_rows(params.m()) {
        for y in [-1i8, 1] {
            terms.push(score(params, y, &row));
        }
    }
    log_sum_exp(&terms)
}

pub fn brute_nll(params: &LabelModelParams, rows: &[Vec<i8>], l2: f64) -> f64 {
    let log_z = brute_log_partition(params);
    let data: f64 = rows
        .iter()
        .map(|r| log_sum_exp(&[score(params, 1, r), score(params, -1, r)]) - log_z)
        .sum();
    let norm: f64 = params
        .theta_acc
        .iter()
        .chain(&params.theta_lab)
        .map(|t| t * t)
        .sum();
    -data + 0.5 * l2 * norm
}

pub fn brute_posterior(params: &LabelModelParams, row: &[i8]) -> f64 {
    let pos = score(params, 1, row);
    let neg = score(params, -1, row);
    1.0 / (1.0 + (neg - pos).exp())
}

pub fn to_votes(rows: &[Vec<i8>]) -> Vec<Vote> {
    rows.iter()
        .flatten()
        .map(|&v| Vote::from_value(v.into()).unwrap())
        .collect()
}

/// Minimum-variance subset of size `h` by exhaustive search, as sorted
/// positions.
pub fn brute_mcd_subset(sorted: &[f64], h: usize) -> Vec<usize> {
    let n = sorted.len();
    let mut best = (f64::INFINITY, Vec::new());
    for mask in 0u32..(1 << n) {
        if mask.count_ones() as usize != h {
            continue;
        }
        let chosen: Vec<usize> = (0..n).filter(|i| mask & (1 << i) != 0).collect();
        let mean = chosen.iter().map(|&i| sorted[i]).sum::<f64>() / h as f64;
        let var = chosen
            .iter()
            .map(|&i| (sorted[i] - mean).powi(2))
            .sum::<f64>()
            / h as f64;
        if var < best.0 {
            best = (var, chosen);
        }
    }
    best.1
}

/// Prominence from its definition: on each side, the highest col towards
/// any strictly higher sample, or the side's minimum when none exists.
pub fn brute_prominence(x: &[f64], p: usize) -> f64 {
    let h = x[p];
    let side = |range: Vec<usize>| -> f64 {
        let higher: Vec<usize> = range.iter().copied().filter(|&q| x[q] > h).collect();
        if higher.is_empty() {
            range.iter().map(|&q| x[q]).fold(h, f64::min)
        } else {
            higher
                .iter()
                .map(|&q| {
                    let (a, b) = if q < p { (q + 1, p) } else { (p, q - 1) };
                    x[a..=b].iter().copied().fold(f64::INFINITY, f64::min)
                })
                .fold(f64::NEG_INFINITY, f64::max)
        }
    };
    let left = side((0..p).collect());
    let right = side((p + 1..x.len()).collect());
    h - left.max(right)
}

/// Peaks as `(index, prominence)`: plateau maxima (middle sample, lower
/// middle for even plateaus) whose prominence reaches `min_prominence`,
/// thinned greedily from the highest so no two are closer than
/// `min_distance`.
pub fn brute_peaks(x: &[f64], min_prominence: f64, min_distance: usize) -> Vec<(usize, f64)> {
    let n = x.len();
    let mut maxima = Vec::new();
    let mut i = 1;
    while i + 1 < n {
        let mut j = i;
        while j + 1 < n && x[j + 1] == x[i] {
            j += 1;
        }
        if x[i - 1] < x[i] && j + 1 < n && x[j + 1] < x[i] {
            maxima.push((i + j) / 2);
        }
        i = j + 1;
    }
    let mut cand: Vec<(usize, f64)> = maxima
        .into_iter()
        .map(|p| (p, brute_prominence(x, p)))
        .filter(|&(_, pr)| pr >= min_prominence && pr > 0.0)
        .collect();
    let mut order: Vec<usize> = (0..cand.len()).collect();
    order.sort_by(|&a, &b| {
        x[cand[b].0]
            .partial_cmp(&x[cand[a].0])
            .unwrap()
            .then(cand[a].0.cmp(&cand[b].0))
    });
    let mut kept: Vec<usize> = Vec::new();
    for o in order {
        if kept
            .iter()
            .all(|&k| cand[k].0.abs_diff(cand[o].0) >= min_distance.max(1))
        {
            kept.push(o);
        }
    }
    kept.sort_unstable();
    cand = kept.into_iter().map(|k| cand[k]).collect();
    cand
}

fn ranks(v: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..v.len()).collect();
    idx.sort_by(|&a, &b| v[a].partial_cmp(&v[b]).unwrap());
    let mut r = vec![0.0; v.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && v[idx[j + 1]] == v[idx[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0;
        for &k in &idx[i..=j] {
            r[k] = avg;
        }
        i = j + 1;
    }
    r
}

pub fn spearman(a: &[f64], b: &[f64]) -> f64 {
    let (ra, rb) = (ranks(a), ranks(b));
    let n = a.len() as f64;
    let ma = ra.iter().sum::<f64>() / n;
    let mb = rb.iter().sum::<f64>() / n;
    let cov: f64 = ra.iter().zip(&rb).map(|(x, y)| (x - ma) * (y - mb)).sum();
    let va: f64 = ra.iter().map(|x| (x - ma).powi(2)).sum();
    let vb: f64 = rb.iter().map(|y| (y - mb).powi(2)).sum();
    cov / (va * vb).sqrt()
}

pub fn accuracy(p: &[f64], truth: &[bool]) -> f64 {
    p.iter()
        .zip(truth)
        .filter(|(p, &y)| (**p > 0.5) == y)
        .count() as f64
        / truth.len() as f64
}

/// TPR and TNR of `p > 0.5`.
pub fn rates(p: &[f64], truth: &[bool]) -> (f64, f64) {
    let (mut tp, mut pos, mut tn, mut neg) = (0, 0, 0, 0);
    for (&p, &y) in p.iter().zip(truth) {
        if y {
            pos += 1;
            tp += usize::from(p > 0.5);
        } else {
            neg += 1;
            tn += usize::from(p <= 0.5);
        }
    }
    (tp as f64 / pos as f64, tn as f64 / neg as f64)
}

/// The default synthetic corpus run through preprocessing, the LFs and a
/// label model fitted on DS1.
pub struct SynthExperiment {
    pub params: LabelModelParams,
    pub train_x: Vec<BeatVector>,
    pub train_truth: Vec<bool>,
    pub train_p: Vec<f64>,
    pub test_x: Vec<BeatVector>,
    pub test_truth: Vec<bool>,
    pub test_p: Vec<f64>,
    pub test_patients: Vec<String>,
}

pub fn synth_experiment(corpus: &CorpusConfig) -> SynthExperiment {
    let exec = Execution::default();
    let records: Vec<_> = generate_corpus(corpus, exec)
        .unwrap()
        .into_iter()
        .map(|r| r.record)
        .collect();
    let processed: Vec<_> = process_records(&records, &PreprocessConfig::default(), exec)
        .into_iter()
        .collect::<Result<_, _>>()
        .unwrap();
    let labeled = label_records(&processed, &LfConfig::default(), exec).unwrap();
    let split = corpus.split_lists();
    let (ds1, ds2): (Vec<usize>, Vec<usize>) =
        (0..processed.len()).partition(|&i| split.ds1.contains(&processed[i].record_name));
    let mats: Vec<&LfMatrix> = ds1.iter().map(|&i| &labeled[i].1).collect();
    let params = fit_pooled(&mats, &FitConfig::default()).unwrap();

    let gather = |idx: &[usize]| {
        let mut x = Vec::new();
        let mut truth = Vec::new();
        let mut p = Vec::new();
        let mut patients = Vec::new();
        for &i in idx {
            let rec = &processed[i];
            x.extend(record_beat_vectors(rec, 128).unwrap());
            truth.extend(rec.beats.iter().map(|b| b.truth == Some(BeatClass::Pvc)));
            p.extend(posterior(&params, labeled[i].1.view()));
            patients.extend(rec.beats.iter().map(|_| rec.record_name.clone()));
        }
        (x, truth, p, patients)
    };
    let (train_x, train_truth, train_p, _) = gather(&ds1);
    let (test_x, test_truth, test_p, test_patients) = gather(&ds2);
    SynthExperiment {
        params,
        train_x,
        train_truth,
        train_p,
        test_x,
        test_truth,
        test_p,
        test_patients,
    }
}
