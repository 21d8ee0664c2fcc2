//! Static 3-D k-d tree over borrowed points.

use nalgebra::Vector3;

pub struct KdTree<'a> {
    points: &'a [Vector3<f64>],
    /// Point indices laid out so each subrange `[lo, hi)` has its splitting
    /// point at the midpoint.
    order: Vec<usize>,
    axis: Vec<u8>,
}

impl<'a> KdTree<'a> {
    pub fn build(points: &'a [Vector3<f64>]) -> Self {
        let mut order: Vec<usize> = (0..points.len()).collect();
        let mut axis = vec![0u8; points.len()];
        build_range(points, &mut order, &mut axis, 0, points.len());
        Self { points, order, axis }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Indices of points within `radius` (inclusive) of `q`, ascending.
    pub fn radius_search(&self, q: &Vector3<f64>, radius: f64) -> Vec<usize> {
        let mut out = Vec::new();
        self.radius_rec(q, radius * radius, radius, 0, self.points.len(), &mut out);
        out.sort_unstable();
        out
    }

    fn radius_rec(&self, q: &Vector3<f64>, r2: f64, r: f64, lo: usize, hi: usize, out: &mut Vec<usize>) {
        if lo >= hi {
            return;
        }
        let mid = (lo + hi) / 2;
        let idx = self.order[mid];
        let p = &self.points[idx];
        if (p - q).norm_squared() <= r2 {
            out.push(idx);
        }
        let a = self.axis[mid] as usize;
        let d = q[a] - p[a];
        if d <= r {
            self.radius_rec(q, r2, r, lo, mid, out);
        }
        if d >= -r {
            self.radius_rec(q, r2, r, mid + 1, hi, out);
        }
    }

    /// The `k` nearest points as `(index, squared distance)`, nearest first;
    /// ties broken by index.
    pub fn knn(&self, q: &Vector3<f64>, k: usize) -> Vec<(usize, f64)> {
        let mut best: Vec<(usize, f64)> = Vec::with_capacity(k + 1);
        if k > 0 {
            self.knn_rec(q, k, 0, self.points.len(), &mut best);
        }
        best
    }

    fn knn_rec(&self, q: &Vector3<f64>, k: usize, lo: usize, hi: usize, best: &mut Vec<(usize, f64)>) {
        if lo >= hi {
            return;
        }
        let mid = (lo + hi) / 2;
        let idx = self.order[mid];
        let p = &self.points[idx];
        let d2 = (p - q).norm_squared();
        let key = (d2, idx);
        if best.len() < k || key < (best[best.len() - 1].1, best[best.len() - 1].0) {
            let pos = best.partition_point(|&(i, d)| (d, i) < key);
            best.insert(pos, (idx, d2));
            best.truncate(k);
        }
        let a = self.axis[mid] as usize;
        let d = q[a] - p[a];
        let (near, far) = if d <= 0.0 {
            ((lo, mid), (mid + 1, hi))
        } else {
            ((mid + 1, hi), (lo, mid))
        };
        self.knn_rec(q, k, near.0, near.1, best);
        if best.len() < k || d * d <= best[best.len() - 1].1 {
            self.knn_rec(q, k, far.0, far.1, best);
        }
    }
}

fn build_range(points: &[Vector3<f64>], order: &mut [usize], axis: &mut [u8], lo: usize, hi: usize) {
    if hi - lo <= 1 {
        return;
    }
    // split on the widest dimension of the range
    let mut min = Vector3::repeat(f64::INFINITY);
    let mut max = Vector3::repeat(f64::NEG_INFINITY);
    for &i in &order[lo..hi] {
        min = min.inf(&points[i]);
        max = max.sup(&points[i]);
    }
    let a = (max - min).imax();
    let mid = (lo + hi) / 2;
    order[lo..hi].select_nth_unstable_by(mid - lo, |&x, &y| {
        points[x][a].total_cmp(&points[y][a]).then(x.cmp(&y))
    });
    axis[mid] = a as u8;
    build_range(points, order, axis, lo, mid);
    build_range(points, order, axis, mid + 1, hi);
}
