//! 3×3 same-padded convolution with its two backward products.

use rand::Rng;

use super::tensor::Tensor;

pub const KERNEL: usize = 3;
const TAPS: usize = KERNEL * KERNEL;

#[derive(Debug, Clone, PartialEq)]
pub struct Conv2d {
    pub in_channels: usize,
    pub out_channels: usize,
    /// `[out][in][ky][kx]`
    pub weight: Vec<f64>,
    pub bias: Vec<f64>,
}

/// Output range `[lo, hi)` along one axis for kernel offset `d ∈ {-1, 0, 1}`,
/// such that `o + d` stays inside `[0, n)`.
#[inline]
fn valid(d: isize, n: usize) -> (usize, usize) {
    let lo = (-d).max(0) as usize;
    let hi = (n as isize - d.max(0)).max(0) as usize;
    (lo.min(hi), hi)
}

impl Conv2d {
    pub fn new(in_channels: usize, out_channels: usize) -> Self {
        Conv2d {
            in_channels,
            out_channels,
            weight: vec![0.0; out_channels * in_channels * TAPS],
            bias: vec![0.0; out_channels],
        }
    }

    /// Uniform init in `±gain·sqrt(3 / fan_in)`.
    pub fn init(&mut self, rng: &mut impl Rng, gain: f64, bias: f64) {
        let bound = gain * (3.0 / (self.in_channels * TAPS) as f64).sqrt();
        for w in &mut self.weight {
            *w = rng.random_range(-bound..bound);
        }
        self.bias.iter_mut().for_each(|b| *b = bias);
    }

    pub fn param_count(&self) -> usize {
        self.weight.len() + self.bias.len()
    }

    #[inline]
    fn w(&self, o: usize, i: usize) -> &[f64] {
        let s = (o * self.in_channels + i) * TAPS;
        &self.weight[s..s + TAPS]
    }

    pub fn forward(&self, input: &Tensor) -> Tensor {
        let (h, w) = (input.height, input.width);
        let mut out = Tensor::zeros(self.out_channels, h, w);
        for o in 0..self.out_channels {
            let dst = out.channel_mut(o);
            dst.iter_mut().for_each(|v| *v = self.bias[o]);
            for i in 0..self.in_channels {
                let src = input.channel(i);
                if src.iter().all(|v| *v == 0.0) {
                    continue;
                }
                let k = self.w(o, i);
                for (tap, &wt) in k.iter().enumerate() {
                    if wt == 0.0 {
                        continue;
                    }
                    let dy = tap as isize / 3 - 1;
                    let dx = tap as isize % 3 - 1;
                    let (y0, y1) = valid(dy, h);
                    let (x0, x1) = valid(dx, w);
                    for y in y0..y1 {
                        let sy = (y as isize + dy) as usize;
                        let d = &mut dst[y * w + x0..y * w + x1];
                        let s = &src[sy * w + (x0 as isize + dx) as usize..sy * w + (x1 as isize + dx) as usize];
                        for (a, b) in d.iter_mut().zip(s) {
                            *a += wt * b;
                        }
                    }
                }
            }
        }
        out
    }

    /// Accumulates weight and bias gradients for output gradient `gout`
    /// against `input`.
    pub fn backward_params(&self, input: &Tensor, gout: &Tensor, gw: &mut [f64], gb: &mut [f64]) {
        let (h, w) = (input.height, input.width);
        for o in 0..self.out_channels {
            let g = gout.channel(o);
            gb[o] += g.iter().sum::<f64>();
            for i in 0..self.in_channels {
                let src = input.channel(i);
                if src.iter().all(|v| *v == 0.0) {
                    continue;
                }
                let base = (o * self.in_channels + i) * TAPS;
                for tap in 0..TAPS {
                    let dy = tap as isize / 3 - 1;
                    let dx = tap as isize % 3 - 1;
                    let (y0, y1) = valid(dy, h);
                    let (x0, x1) = valid(dx, w);
                    let mut acc = 0.0;
                    for y in y0..y1 {
                        let sy = (y as isize + dy) as usize;
                        let gg = &g[y * w + x0..y * w + x1];
                        let s = &src[sy * w + (x0 as isize + dx) as usize..sy * w + (x1 as isize + dx) as usize];
                        acc += gg.iter().zip(s).map(|(a, b)| a * b).sum::<f64>();
                    }
                    gw[base + tap] += acc;
                }
            }
        }
    }

    /// Gradient with respect to the input.
    pub fn backward_input(&self, gout: &Tensor) -> Tensor {
        let (h, w) = (gout.height, gout.width);
        let mut gin = Tensor::zeros(self.in_channels, h, w);
        for o in 0..self.out_channels {
            let g = gout.channel(o);
            if g.iter().all(|v| *v == 0.0) {
                continue;
            }
            for i in 0..self.in_channels {
                let k = self.w(o, i);
                let dst = gin.channel_mut(i);
                for (tap, &wt) in k.iter().enumerate() {
                    let dy = tap as isize / 3 - 1;
                    let dx = tap as isize % 3 - 1;
                    let (y0, y1) = valid(dy, h);
                    let (x0, x1) = valid(dx, w);
                    for y in y0..y1 {
                        let sy = (y as isize + dy) as usize;
                        let d = &mut dst[sy * w + (x0 as isize + dx) as usize..sy * w + (x1 as isize + dx) as usize];
                        let gg = &g[y * w + x0..y * w + x1];
                        for (a, b) in d.iter_mut().zip(gg) {
                            *a += wt * b;
                        }
                    }
                }
            }
        }
        gin
    }

    /// Number of output positions each input pixel reaches, summed over the
    /// non-zero inputs and multiplied by the output channels.
    pub fn sparse_ops(&self, input: &Tensor) -> u64 {
        let (h, w) = (input.height, input.width);
        let reach = |p: usize, n: usize| -> u64 { 1 + (p > 0) as u64 + (p + 1 < n) as u64 };
        let mut ops = 0u64;
        for i in 0..self.in_channels {
            let src = input.channel(i);
            for y in 0..h {
                for x in 0..w {
                    if src[y * w + x] != 0.0 {
                        ops += reach(y, h) * reach(x, w);
                    }
                }
            }
        }
        ops * self.out_channels as u64
    }

    /// Multiply-accumulates of a dense pass over an `h × w` input.
    pub fn dense_macs(&self, h: usize, w: usize) -> u64 {
        let reach = |n: usize| -> u64 {
            if n == 0 {
                0
            } else {
                3 * n as u64 - 2
            }
        };
        reach(h) * reach(w) * (self.in_channels * self.out_channels) as u64
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn naive(conv: &Conv2d, input: &Tensor) -> Tensor {
        let (h, w) = (input.height as isize, input.width as isize);
        let mut out = Tensor::zeros(conv.out_channels, input.height, input.width);
        for o in 0..conv.out_channels {
            for y in 0..h {
                for x in 0..w {
                    let mut acc = conv.bias[o];
                    for i in 0..conv.in_channels {
                        for ky in 0..3isize {
                            for kx in 0..3isize {
                                let (sy, sx) = (y + ky - 1, x + kx - 1);
                                if sy >= 0 && sy < h && sx >= 0 && sx < w {
                                    acc += conv.weight[((o * conv.in_channels + i) * 3 + ky as usize) * 3 + kx as usize]
                                        * input.at(i, sy as usize, sx as usize);
                                }
                            }
                        }
                    }
                    out.set(o, y as usize, x as usize, acc);
                }
            }
        }
        out
    }

    fn random(rng: &mut ChaCha8Rng, c: usize, h: usize, w: usize) -> Tensor {
        Tensor::from_vec(c, h, w, (0..c * h * w).map(|_| rng.random_range(-1.0..1.0)).collect()).unwrap()
    }

    #[test]
    fn forward_matches_naive() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut conv = Conv2d::new(3, 4);
        conv.init(&mut rng, 1.0, 0.1);
        let x = random(&mut rng, 3, 5, 7);
        let a = conv.forward(&x);
        let b = naive(&conv, &x);
        for (p, q) in a.data.iter().zip(&b.data) {
            assert!((p - q).abs() < 1e-12);
        }
    }

    #[test]
    fn backward_is_adjoint() {
        // <conv(x) - b, g> = <x, conv^T g> and = <w, dW>
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let mut conv = Conv2d::new(2, 3);
        conv.init(&mut rng, 1.0, 0.0);
        let x = random(&mut rng, 2, 6, 4);
        let g = random(&mut rng, 3, 6, 4);
        let y = conv.forward(&x);
        let lhs: f64 = y.data.iter().zip(&g.data).map(|(a, b)| a * b).sum();
        let gin = conv.backward_input(&g);
        let rhs: f64 = x.data.iter().zip(&gin.data).map(|(a, b)| a * b).sum();
        assert!((lhs - rhs).abs() < 1e-9);
        let mut gw = vec![0.0; conv.weight.len()];
        let mut gb = vec![0.0; 3];
        conv.backward_params(&x, &g, &mut gw, &mut gb);
        let viaw: f64 = conv.weight.iter().zip(&gw).map(|(a, b)| a * b).sum();
        assert!((lhs - viaw).abs() < 1e-9);
    }

    #[test]
    fn op_counts() {
        let conv = Conv2d::new(1, 2);
        let full = Tensor::filled(1, 4, 5, 1.0);
        assert_eq!(conv.sparse_ops(&full), conv.dense_macs(4, 5));
        assert_eq!(conv.sparse_ops(&Tensor::zeros(1, 4, 5)), 0);
    }
}
