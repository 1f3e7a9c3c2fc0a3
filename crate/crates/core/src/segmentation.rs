//! Superpixel segmentation and region merging.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use image::DynamicImage;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::raster::{decode_dynamic, encode_png, write_bytes, GrayImage, Mask, Raster, RgbImage};

/// SLIC refinement passes.
pub const SLIC_ITERATIONS: usize = 10;

/// Flat partition of an image into labels `0..N`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SegmentMap {
    width: usize,
    height: usize,
    labels: Vec<usize>,
    areas: Vec<usize>,
}

impl SegmentMap {
    /// Relabels `raw` contiguously in order of first appearance.
    pub fn from_raw_labels(width: usize, height: usize, raw: &[usize]) -> Result<Self> {
        if raw.len() != width * height {
            return Err(Error::InvalidArgument(format!(
                "label buffer of {} values does not match {width}x{height}",
                raw.len()
            )));
        }
        let mut remap: BTreeMap<usize, usize> = BTreeMap::new();
        let mut labels = Vec::with_capacity(raw.len());
        let mut areas = Vec::new();
        for &v in raw {
            let next = remap.len();
            let id = *remap.entry(v).or_insert(next);
            if id == areas.len() {
                areas.push(0);
            }
            areas[id] += 1;
            labels.push(id);
        }
        Ok(Self {
            width,
            height,
            labels,
            areas,
        })
    }

    pub fn single(width: usize, height: usize) -> Self {
        Self {
            width,
            height,
            labels: vec![0; width * height],
            areas: vec![width * height],
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn label(&self, row: usize, col: usize) -> usize {
        self.labels[row * self.width + col]
    }

    pub fn len(&self) -> usize {
        self.areas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.areas.is_empty()
    }

    pub fn segment_ids(&self) -> std::ops::Range<usize> {
        0..self.areas.len()
    }

    pub fn areas(&self) -> &[usize] {
        &self.areas
    }

    /// Segments as 4-connected components of equal labels.
    pub fn is_connected(&self) -> bool {
        let (_, count) = components(self.width, self.height, &self.labels);
        count == self.len()
    }

    /// Labels as an 8-bit raster when N ≤ 256, otherwise 16-bit.
    pub fn save_png(&self, path: impl AsRef<Path>) -> Result<()> {
        let bytes = if self.len() <= 256 {
            let px: Vec<u8> = self.labels.iter().map(|&l| l as u8).collect();
            encode_png(self.width, self.height, &px, image::ExtendedColorType::L8)
        } else {
            let px: Vec<u8> = self
                .labels
                .iter()
                .flat_map(|&l| (l.min(u16::MAX as usize) as u16).to_ne_bytes())
                .collect();
            encode_png(self.width, self.height, &px, image::ExtendedColorType::L16)
        };
        write_bytes(path.as_ref(), &bytes)
    }

    /// Random distinct-looking colour per segment.
    pub fn preview(&self, seed: u64) -> RgbImage {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let palette: Vec<[u8; 3]> = (0..self.len())
            .map(|_| [rng.random(), rng.random(), rng.random()])
            .collect();
        let rgb: Vec<u8> = self.labels.iter().flat_map(|&l| palette[l]).collect();
        RgbImage::from_interleaved(self.width, self.height, &rgb).expect("consistent preview dims")
    }
}

/// 4-connected components of equal values; ids in raster order.
fn components(width: usize, height: usize, values: &[usize]) -> (Vec<usize>, usize) {
    const UNSET: usize = usize::MAX;
    let mut comp = vec![UNSET; values.len()];
    let mut count = 0;
    let mut stack = Vec::new();
    for start in 0..values.len() {
        if comp[start] != UNSET {
            continue;
        }
        comp[start] = count;
        stack.push(start);
        while let Some(i) = stack.pop() {
            let (r, c) = (i / width, i % width);
            let mut visit = |j: usize| {
                if comp[j] == UNSET && values[j] == values[i] {
                    comp[j] = count;
                    stack.push(j);
                }
            };
            if r > 0 {
                visit(i - width);
            }
            if r + 1 < height {
                visit(i + width);
            }
            if c > 0 {
                visit(i - 1);
            }
            if c + 1 < width {
                visit(i + 1);
            }
        }
        count += 1;
    }
    (comp, count)
}

fn adjacency(width: usize, height: usize, labels: &[usize]) -> BTreeSet<(usize, usize)> {
    let mut pairs = BTreeSet::new();
    for r in 0..height {
        for c in 0..width {
            let a = labels[r * width + c];
            if c + 1 < width {
                let b = labels[r * width + c + 1];
                if a != b {
                    pairs.insert((a.min(b), a.max(b)));
                }
            }
            if r + 1 < height {
                let b = labels[(r + 1) * width + c];
                if a != b {
                    pairs.insert((a.min(b), a.max(b)));
                }
            }
        }
    }
    pairs
}

struct UnionFind(Vec<usize>);

impl UnionFind {
    fn new(n: usize) -> Self {
        Self((0..n).collect())
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.0[x] != x {
            self.0[x] = self.0[self.0[x]];
            x = self.0[x];
        }
        x
    }

    fn union_into(&mut self, from: usize, into: usize) {
        let (a, b) = (self.find(from), self.find(into));
        if a != b {
            self.0[a] = b;
        }
    }
}

/// Grid of `nx`×`ny` seed cells for roughly `target` superpixels.
pub fn seed_grid(width: usize, height: usize, target: usize) -> (usize, usize) {
    let target = target.min(width * height).max(1);
    let nx = ((target as f64 * width as f64 / height as f64).sqrt().ceil() as usize).clamp(1, width);
    let ny = ((target as f64 / nx as f64).round() as usize).clamp(1, height);
    (nx, ny)
}

#[derive(Debug, Clone)]
struct Center {
    color: Vec<f64>,
    row: f64,
    col: f64,
}

/// SLIC superpixels over the raster's own channels (0–255 scale).
/// Seeds sit at the centres of a regular grid; fragments left
/// disconnected after clustering are absorbed by their largest neighbour.
pub fn slic_superpixels(img: &Raster, target_count: usize, compactness: f64) -> Result<SegmentMap> {
    if target_count == 0 {
        return Err(Error::InvalidArgument("target superpixel count must be positive".into()));
    }
    if !(compactness > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "compactness must be positive, got {compactness}"
        )));
    }
    let planes = img.planes();
    let (width, height) = img.dims();
    let (nx, ny) = seed_grid(width, height, target_count);
    let cell_w = width as f64 / nx as f64;
    let cell_h = height as f64 / ny as f64;
    let step = (cell_w * cell_h).sqrt();
    let spatial_weight = (compactness / step).powi(2);
    let reach_r = cell_h.ceil() as isize;
    let reach_c = cell_w.ceil() as isize;

    let pixel = |r: usize, c: usize| -> Vec<f64> { planes.iter().map(|p| p.get(r, c)).collect() };
    let mut centers: Vec<Center> = Vec::with_capacity(nx * ny);
    for gy in 0..ny {
        for gx in 0..nx {
            let row = (gy as f64 + 0.5) * cell_h;
            let col = (gx as f64 + 0.5) * cell_w;
            let (pr, pc) = ((row as usize).min(height - 1), (col as usize).min(width - 1));
            centers.push(Center {
                color: pixel(pr, pc),
                row,
                col,
            });
        }
    }

    let mut labels: Vec<usize> = (0..width * height)
        .map(|i| {
            let gy = (((i / width) as f64 / cell_h) as usize).min(ny - 1);
            let gx = (((i % width) as f64 / cell_w) as usize).min(nx - 1);
            gy * nx + gx
        })
        .collect();
    let mut dist = vec![f64::INFINITY; width * height];

    for _ in 0..SLIC_ITERATIONS {
        dist.iter_mut().for_each(|d| *d = f64::INFINITY);
        for (k, ctr) in centers.iter().enumerate() {
            let r0 = (ctr.row as isize - reach_r).max(0) as usize;
            let r1 = ((ctr.row as isize + reach_r) as usize).min(height - 1);
            let c0 = (ctr.col as isize - reach_c).max(0) as usize;
            let c1 = ((ctr.col as isize + reach_c) as usize).min(width - 1);
            for r in r0..=r1 {
                let dr = r as f64 + 0.5 - ctr.row;
                for c in c0..=c1 {
                    let dc = c as f64 + 0.5 - ctr.col;
                    let color: f64 = planes
                        .iter()
                        .zip(&ctr.color)
                        .map(|(p, v)| (p.get(r, c) - v).powi(2))
                        .sum();
                    let d = color + (dr * dr + dc * dc) * spatial_weight;
                    let i = r * width + c;
                    if d < dist[i] {
                        dist[i] = d;
                        labels[i] = k;
                    }
                }
            }
        }
        let channels = planes.len();
        let mut sums = vec![vec![0.0; channels + 2]; centers.len()];
        let mut counts = vec![0usize; centers.len()];
        for r in 0..height {
            for c in 0..width {
                let k = labels[r * width + c];
                let s = &mut sums[k];
                for (ch, p) in planes.iter().enumerate() {
                    s[ch] += p.get(r, c);
                }
                s[channels] += r as f64 + 0.5;
                s[channels + 1] += c as f64 + 0.5;
                counts[k] += 1;
            }
        }
        for (k, ctr) in centers.iter_mut().enumerate() {
            if counts[k] == 0 {
                continue;
            }
            let n = counts[k] as f64;
            for ch in 0..channels {
                ctr.color[ch] = sums[k][ch] / n;
            }
            ctr.row = sums[k][channels] / n;
            ctr.col = sums[k][channels + 1] / n;
        }
    }

    SegmentMap::from_raw_labels(width, height, &enforce_connectivity(width, height, &labels))
}

/// Keeps the largest component of every label and merges each remaining
/// fragment into its largest adjacent component.
fn enforce_connectivity(width: usize, height: usize, labels: &[usize]) -> Vec<usize> {
    let (comp, count) = components(width, height, labels);
    let mut area = vec![0usize; count];
    let mut owner = vec![0usize; count];
    for (i, &c) in comp.iter().enumerate() {
        area[c] += 1;
        owner[c] = labels[i];
    }
    let mut best: BTreeMap<usize, usize> = BTreeMap::new();
    for c in 0..count {
        let e = best.entry(owner[c]).or_insert(c);
        if area[c] > area[*e] {
            *e = c;
        }
    }
    let kept: BTreeSet<usize> = best.values().copied().collect();
    let mut neighbours: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); count];
    for (a, b) in adjacency(width, height, &comp) {
        neighbours[a].insert(b);
        neighbours[b].insert(a);
    }
    let mut uf = UnionFind::new(count);
    let mut orphans: Vec<usize> = (0..count).filter(|c| !kept.contains(c)).collect();
    orphans.sort_by_key(|&c| (area[c], c));
    for c in orphans {
        if let Some(&target) = neighbours[c]
            .iter()
            .max_by_key(|&&n| (area[n], std::cmp::Reverse(n)))
        {
            uf.union_into(c, target);
        }
    }
    comp.iter().map(|&c| uf.find(c)).collect()
}

/// Mean colour of every segment.
fn segment_means(map: &SegmentMap, img: &Raster) -> Vec<Vec<f64>> {
    let planes = img.planes();
    let mut sums = vec![vec![0.0; planes.len()]; map.len()];
    for (i, &l) in map.labels.iter().enumerate() {
        for (ch, p) in planes.iter().enumerate() {
            sums[l][ch] += p.data()[i];
        }
    }
    sums.iter()
        .zip(&map.areas)
        .map(|(s, &a)| s.iter().map(|v| v / a as f64).collect())
        .collect()
}

fn color_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt()
}

/// Repeatedly merges the closest adjacent pair of segments while their
/// mean-colour distance is below `merge_threshold`.
pub fn merge_regions(sp: &SegmentMap, img: &Raster, merge_threshold: f64) -> Result<SegmentMap> {
    if img.dims() != sp.dims() {
        return Err(Error::ShapeMismatch {
            expected: sp.dims(),
            actual: img.dims(),
        });
    }
    let mut means = segment_means(sp, img);
    let mut areas: Vec<f64> = sp.areas.iter().map(|&a| a as f64).collect();
    let mut alive = vec![true; sp.len()];
    let mut edges = adjacency(sp.width, sp.height, &sp.labels);
    let mut uf = UnionFind::new(sp.len());

    loop {
        let closest = edges
            .iter()
            .map(|&(a, b)| (color_distance(&means[a], &means[b]), a, b))
            .filter(|&(d, _, _)| d < merge_threshold)
            .min_by(|x, y| x.0.total_cmp(&y.0).then((x.1, x.2).cmp(&(y.1, y.2))));
        let Some((_, a, b)) = closest else { break };
        let total = areas[a] + areas[b];
        let merged: Vec<f64> = means[a]
            .iter()
            .zip(&means[b])
            .map(|(x, y)| (x * areas[a] + y * areas[b]) / total)
            .collect();
        means[a] = merged;
        areas[a] = total;
        alive[b] = false;
        uf.union_into(b, a);
        edges = edges
            .into_iter()
            .filter_map(|(x, y)| {
                let x = if x == b { a } else { x };
                let y = if y == b { a } else { y };
                (x != y).then(|| (x.min(y), x.max(y)))
            })
            .collect();
    }
    debug_assert!(alive.iter().any(|&v| v));
    let raw: Vec<usize> = sp.labels.iter().map(|&l| uf.find(l)).collect();
    SegmentMap::from_raw_labels(sp.width, sp.height, &raw)
}

/// Label map from an image file: each distinct pixel value becomes one
/// segment, numbered in ascending value order.
pub fn load_segment_map(path: impl AsRef<Path>, shape: (usize, usize)) -> Result<SegmentMap> {
    let path = path.as_ref();
    let img = decode_dynamic(path)?;
    let dims = (img.width() as usize, img.height() as usize);
    if dims != shape {
        return Err(Error::ShapeMismatch {
            expected: shape,
            actual: dims,
        });
    }
    let raw: Vec<usize> = match &img {
        DynamicImage::ImageLuma8(b) => b.as_raw().iter().map(|&v| v as usize).collect(),
        DynamicImage::ImageLuma16(b) => b.as_raw().iter().map(|&v| v as usize).collect(),
        other => other
            .to_rgba8()
            .as_raw()
            .chunks_exact(4)
            .map(|p| u32::from_be_bytes([p[0], p[1], p[2], p[3]]) as usize)
            .collect(),
    };
    let mut distinct: Vec<usize> = raw.clone();
    distinct.sort_unstable();
    distinct.dedup();
    let labels: Vec<usize> = raw
        .iter()
        .map(|v| distinct.binary_search(v).expect("value present"))
        .collect();
    let (width, height) = shape;
    let mut areas = vec![0usize; distinct.len()];
    for &l in &labels {
        areas[l] += 1;
    }
    Ok(SegmentMap {
        width,
        height,
        labels,
        areas,
    })
}

/// Pixels carrying label `id`.
pub fn segment_mask(map: &SegmentMap, id: usize) -> Result<Mask> {
    if id >= map.len() {
        return Err(Error::UnknownLabel(id));
    }
    Ok(Mask::from_fn(map.width, map.height, |r, c| map.label(r, c) == id))
}

/// Segment mask at the resolution of `band_dims`, halving by 2×2 majority
/// vote as often as needed.
pub fn segment_band_mask(map: &SegmentMap, id: usize, band_dims: (usize, usize)) -> Result<Mask> {
    let mut mask = segment_mask(map, id)?;
    while mask.dims() != band_dims {
        if mask.width() <= band_dims.0 || mask.height() <= band_dims.1 {
            return Err(Error::ShapeMismatch {
                expected: band_dims,
                actual: mask.dims(),
            });
        }
        mask = mask.downsample_majority();
    }
    Ok(mask)
}

/// Segments from a gray image.
pub fn segment_gray(img: &GrayImage, target_count: usize, compactness: f64, merge_threshold: f64) -> Result<SegmentMap> {
    let raster = Raster::Gray(img.clone());
    merge_regions(&slic_superpixels(&raster, target_count, compactness)?, &raster, merge_threshold)
}
