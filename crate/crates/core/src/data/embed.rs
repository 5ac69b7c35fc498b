//! 32×32 canvases and class-marking overlays.
//!
//! The marking region is row 0, columns 0..10. A positive or negative sample
//! carries a one-hot 1.0 at the marked class; the neutral embedding used for
//! readout spreads 0.1 over all ten pixels.

use super::idx::{RawImage, RAW_SIDE};
use crate::{CLASSES, FEATURES, SIDE};
use rand::Rng;

const PAD: usize = (SIDE - RAW_SIDE) / 2;

/// A 32×32 image with intensities in [0, 1], row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Canvas(pub Vec<f64>);

impl Canvas {
    pub fn zeros() -> Self {
        Canvas(vec![0.0; FEATURES])
    }

    pub fn at(&self, row: usize, col: usize) -> f64 {
        self.0[row * SIDE + col]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Polarity {
    Positive,
    Negative,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddedSample {
    pub pixels: Canvas,
    pub true_class: usize,
    pub polarity: Polarity,
    pub marked_class: usize,
}

/// Zero-pads by two pixels on every side and scales by 1/255.
pub fn pad_to_canvas(raw: &RawImage) -> Canvas {
    let mut c = Canvas::zeros();
    for (r, row) in raw.pixels().chunks_exact(RAW_SIDE).enumerate() {
        let dst = &mut c.0[(r + PAD) * SIDE + PAD..(r + PAD) * SIDE + PAD + RAW_SIDE];
        for (d, &p) in dst.iter_mut().zip(row) {
            *d = f64::from(p) / 255.0;
        }
    }
    c
}

fn write_marking(pixels: &mut [f64], values: [f64; CLASSES]) {
    pixels[..CLASSES].copy_from_slice(&values);
}

/// Overwrites the marking region with a one-hot at `marked_class`.
pub fn embed_marked(canvas: &Canvas, true_class: usize, marked_class: usize) -> EmbeddedSample {
    assert!(true_class < CLASSES && marked_class < CLASSES);
    let mut pixels = canvas.clone();
    let mut onehot = [0.0; CLASSES];
    onehot[marked_class] = 1.0;
    write_marking(&mut pixels.0, onehot);
    EmbeddedSample {
        pixels,
        true_class,
        polarity: if marked_class == true_class {
            Polarity::Positive
        } else {
            Polarity::Negative
        },
        marked_class,
    }
}

/// Draws a wrong class uniformly from the nine classes other than `true_class`.
pub fn draw_negative_class<R: Rng + ?Sized>(true_class: usize, rng: &mut R) -> usize {
    loop {
        let c = rng.random_range(0..CLASSES);
        if c != true_class {
            return c;
        }
    }
}

pub fn embed_label<R: Rng + ?Sized>(
    canvas: &Canvas,
    true_class: usize,
    polarity: Polarity,
    rng: &mut R,
) -> EmbeddedSample {
    let marked = match polarity {
        Polarity::Positive => true_class,
        Polarity::Negative => draw_negative_class(true_class, rng),
    };
    embed_marked(canvas, true_class, marked)
}

/// Label-free embedding used when the class is unknown (readout and inference).
pub fn embed_neutral(canvas: &Canvas) -> Canvas {
    let mut c = canvas.clone();
    write_marking(&mut c.0, [1.0 / CLASSES as f64; CLASSES]);
    c
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::idx::RAW_PIXELS;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn raw(f: impl Fn(usize) -> u8) -> RawImage {
        let mut px = [0u8; RAW_PIXELS];
        for (i, p) in px.iter_mut().enumerate() {
            *p = f(i);
        }
        RawImage(Box::new(px))
    }

    #[test]
    fn pad_zero() {
        assert!(pad_to_canvas(&raw(|_| 0)).0.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn pad_corner() {
        let c = pad_to_canvas(&raw(|i| if i == 0 { 255 } else { 0 }));
        assert_eq!(c.at(2, 2), 1.0);
        assert_eq!(c.at(0, 0), 0.0);
    }

    #[test]
    fn pad_full() {
        let c = pad_to_canvas(&raw(|_| 255));
        for r in 0..SIDE {
            for col in 0..SIDE {
                let inside = (2..30).contains(&r) && (2..30).contains(&col);
                assert_eq!(c.at(r, col), if inside { 1.0 } else { 0.0 });
            }
        }
    }

    #[test]
    fn positive_marking() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let s = embed_label(&Canvas::zeros(), 3, Polarity::Positive, &mut rng);
        assert_eq!(s.marked_class, 3);
        for j in 0..CLASSES {
            assert_eq!(s.pixels.at(0, j), if j == 3 { 1.0 } else { 0.0 });
        }
    }

    #[test]
    fn negative_with_given_draw() {
        let s = embed_marked(&Canvas::zeros(), 3, 8);
        assert_eq!(s.polarity, Polarity::Negative);
        assert_eq!(s.marked_class, 8);
        assert_eq!(s.pixels.at(0, 8), 1.0);
    }

    #[test]
    fn negative_draws_cover_wrong_classes() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut seen = [0usize; CLASSES];
        for _ in 0..10_000 {
            let s = embed_label(&Canvas::zeros(), 3, Polarity::Negative, &mut rng);
            assert_eq!(s.polarity, Polarity::Negative);
            seen[s.marked_class] += 1;
        }
        assert_eq!(seen[3], 0);
        assert!(seen.iter().enumerate().all(|(c, &n)| c == 3 || n > 0));
    }

    #[test]
    fn neutral_marking_sums_to_one() {
        let c = embed_neutral(&Canvas(vec![0.7; FEATURES]));
        let s: f64 = c.0[..CLASSES].iter().sum();
        assert!((s - 1.0).abs() < 1e-15);
        assert_eq!(c.at(0, CLASSES), 0.7);
    }

    proptest! {
        #[test]
        fn pad_preserves_mass(px in proptest::collection::vec(any::<u8>(), RAW_PIXELS)) {
            let r = RawImage(Box::new(px.clone().try_into().unwrap()));
            let total: u64 = px.iter().map(|&p| u64::from(p)).sum();
            let s: f64 = pad_to_canvas(&r).0.iter().sum();
            prop_assert!((s * 255.0 - total as f64).abs() < 1e-9 * (1.0 + total as f64));
        }

        #[test]
        fn reembedding_overwrites(first in 0usize..10, second in 0usize..10, truth in 0usize..10) {
            let once = embed_marked(&Canvas(vec![0.5; FEATURES]), truth, first);
            let twice = embed_marked(&once.pixels, truth, second);
            let mark: f64 = twice.pixels.0[..CLASSES].iter().sum();
            prop_assert_eq!(mark, 1.0);
            prop_assert_eq!(twice.pixels.at(0, second), 1.0);
            prop_assert_eq!(twice.polarity == Polarity::Positive, second == truth);
        }
    }
}
