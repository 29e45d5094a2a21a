#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use cellcount_core::archspec::{ArchGraph, LayerKind};
use cellcount_core::{BinaryMask, Raster};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub fn mask_from_fn(w: usize, h: usize, f: impl FnMut(usize, usize) -> bool) -> BinaryMask {
    Raster::from_fn(w, h, f).unwrap()
}

pub fn noise_mask(rng: &mut ChaCha8Rng, w: usize, h: usize, density: f64) -> BinaryMask {
    mask_from_fn(w, h, |_, _| rng.random_bool(density))
}

/// Up to `n` random filled ellipses and rectangles.
pub fn blob_mask(rng: &mut ChaCha8Rng, w: usize, h: usize, n: usize) -> BinaryMask {
    let shapes: Vec<(bool, f64, f64, f64, f64)> = (0..n)
        .map(|_| {
            (
                rng.random_bool(0.5),
                rng.random_range(0.0..w as f64),
                rng.random_range(0.0..h as f64),
                rng.random_range(1.0..(w as f64 / 4.0).max(1.5)),
                rng.random_range(1.0..(h as f64 / 4.0).max(1.5)),
            )
        })
        .collect();
    mask_from_fn(w, h, |x, y| {
        let (x, y) = (x as f64, y as f64);
        shapes.iter().any(|&(round, cx, cy, rx, ry)| {
            let (u, v) = ((x - cx) / rx, (y - cy) / ry);
            if round {
                u * u + v * v <= 1.0
            } else {
                u.abs() <= 1.0 && v.abs() <= 1.0
            }
        })
    })
}

/// Distance from every foreground pixel to the nearest background pixel,
/// by exhaustive search.
pub fn brute_edt(mask: &BinaryMask) -> Vec<f64> {
    let bg: Vec<(usize, usize)> = mask.enumerate().filter(|p| !*p.2).map(|(x, y, _)| (x, y)).collect();
    mask.enumerate()
        .map(|(x, y, &fg)| {
            if !fg {
                return 0.0;
            }
            bg.iter()
                .map(|&(bx, by)| {
                    let (dx, dy) = (x as f64 - bx as f64, y as f64 - by as f64);
                    (dx * dx + dy * dy).sqrt()
                })
                .fold(f64::INFINITY, f64::min)
        })
        .collect()
}

/// 8-connected flood-fill labeling; labels in order of first pixel.
pub fn bfs_components(mask: &BinaryMask) -> (Vec<u32>, u32) {
    let (w, h) = (mask.width(), mask.height());
    let mut labels = vec![0u32; w * h];
    let mut next = 0;
    for start in 0..w * h {
        if !mask.as_slice()[start] || labels[start] != 0 {
            continue;
        }
        next += 1;
        labels[start] = next;
        let mut queue = VecDeque::from([start]);
        while let Some(i) = queue.pop_front() {
            let (x, y) = ((i % w) as isize, (i / w) as isize);
            for dy in -1..=1 {
                for dx in -1..=1 {
                    let (nx, ny) = (x + dx, y + dy);
                    if nx < 0 || ny < 0 || nx >= w as isize || ny >= h as isize {
                        continue;
                    }
                    let j = ny as usize * w + nx as usize;
                    if mask.as_slice()[j] && labels[j] == 0 {
                        labels[j] = next;
                        queue.push_back(j);
                    }
                }
            }
        }
    }
    (labels, next)
}

/// Base weight plus, for every object, `exp(-d²/2σ²)` with `d` the distance
/// to that object's nearest border pixel (4-neighbor border, image edge
/// counts as outside).
pub fn brute_weight_map(mask: &BinaryMask, sigma: f64, fg_base: f64, bg_base: f64) -> Vec<f64> {
    let (w, h) = (mask.width(), mask.height());
    let (labels, count) = bfs_components(mask);
    let at = |x: isize, y: isize| {
        if x < 0 || y < 0 || x >= w as isize || y >= h as isize {
            0
        } else {
            labels[y as usize * w + x as usize]
        }
    };
    let mut borders: Vec<Vec<(f64, f64)>> = vec![Vec::new(); count as usize];
    for y in 0..h as isize {
        for x in 0..w as isize {
            let l = at(x, y);
            if l != 0 && [(1, 0), (-1, 0), (0, 1), (0, -1)].iter().any(|&(dx, dy)| at(x + dx, y + dy) != l) {
                borders[l as usize - 1].push((x as f64, y as f64));
            }
        }
    }
    mask.enumerate()
        .map(|(x, y, &fg)| {
            let prox: f64 = borders
                .iter()
                .map(|b| {
                    let d2 = b
                        .iter()
                        .map(|&(bx, by)| (x as f64 - bx).powi(2) + (y as f64 - by).powi(2))
                        .fold(f64::INFINITY, f64::min);
                    (-d2 / (2.0 * sigma * sigma)).exp()
                })
                .sum();
            (if fg { fg_base } else { bg_base }) + prox
        })
        .collect()
}

/// Repeatedly takes the globally closest unmatched pair under the gate,
/// ties to the smallest (target, prediction).
pub fn brute_match(targets: &[(f64, f64)], preds: &[(f64, f64)], max_dist: f64) -> Vec<(usize, usize)> {
    let mut t_used = vec![false; targets.len()];
    let mut p_used = vec![false; preds.len()];
    let mut out = Vec::new();
    loop {
        let mut best: Option<(f64, usize, usize)> = None;
        for (t, a) in targets.iter().enumerate() {
            for (p, b) in preds.iter().enumerate() {
                if t_used[t] || p_used[p] {
                    continue;
                }
                let d = ((a.0 - b.0).powi(2) + (a.1 - b.1).powi(2)).sqrt();
                if d < max_dist && best.is_none_or(|(bd, _, _)| d < bd) {
                    best = Some((d, t, p));
                }
            }
        }
        let Some((_, t, p)) = best else { break };
        t_used[t] = true;
        p_used[p] = true;
        out.push((t, p));
    }
    out
}

/// Output positions one input position reaches through a single layer.
fn forward(layer: &LayerKind, i: i64) -> Vec<i64> {
    match *layer {
        LayerKind::Conv { kernel, stride, .. } => {
            let (r, s) = ((kernel as i64 - 1) / 2, stride as i64);
            ((i - r).div_euclid(s) - 1..=(i + r).div_euclid(s) + 1)
                .filter(|o| s * o - r <= i && i <= s * o + r)
                .collect()
        }
        LayerKind::MaxPool { size } => vec![i.div_euclid(size as i64)],
        LayerKind::Upsample { factor: f } | LayerKind::TransposedConv { stride: f, .. } => {
            let f = f as i64;
            (f * i..f * i + f).collect()
        }
        _ => vec![i],
    }
}

/// Receptive field along one axis: mark each input position in turn, push
/// its influence set through the graph, and record which inputs reach each
/// output position. The widest span over one full period of output
/// positions (any window at least one period long) is the answer.
pub fn influence_receptive_field(g: &ArchGraph) -> usize {
    let window = 16;
    let reach = 400;
    let mut sources: BTreeMap<i64, Vec<i64>> = BTreeMap::new();
    for i in -reach..=reach {
        let mut sets: Vec<BTreeSet<i64>> = vec![BTreeSet::new(); g.nodes().len()];
        sets[0].insert(i);
        for n in &g.nodes()[1..] {
            let mut s = BTreeSet::new();
            for &src in &n.inputs {
                for &p in &sets[src] {
                    s.extend(forward(&n.layer, p));
                }
            }
            sets[n.id] = s;
        }
        for &o in &sets[g.output()] {
            if (0..window).contains(&o) {
                sources.entry(o).or_default().push(i);
            }
        }
    }
    sources
        .values()
        .map(|v| (v.iter().max().unwrap() - v.iter().min().unwrap() + 1) as usize)
        .max()
        .unwrap()
}
