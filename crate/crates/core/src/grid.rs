//! Row-major 2D buffers: RGB images, binary masks and the texture atlas.

use alloc::vec;
use alloc::vec::Vec;

/// Linear RGB triple with channels in `[0, 1]`.
pub type Rgb = [f32; 3];

/// Dense row-major 2D buffer. Pixel `(x, y)` lives at `y * width + x`, with
/// `(0, 0)` the top-left corner.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid<T> {
    width: usize,
    height: usize,
    data: Vec<T>,
}

/// Per-pixel RGB in `[0, 1]`.
pub type RgbImage = Grid<Rgb>;
/// Per-pixel binary flag.
pub type Mask = Grid<bool>;
/// Texture map in UV space. Shares the image representation; the
/// power-of-two resolution policy is enforced where atlases are configured.
pub type TextureAtlas = RgbImage;
/// Colored-texel mask paired with a [`TextureAtlas`].
pub type UvMask = Mask;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum GridError {
    #[error("dimension mismatch: {left_w}x{left_h} vs {right_w}x{right_h}")]
    DimensionMismatch {
        left_w: usize,
        left_h: usize,
        right_w: usize,
        right_h: usize,
    },
    #[error("buffer of length {len} does not fit {width}x{height}")]
    BadLength {
        width: usize,
        height: usize,
        len: usize,
    },
    #[error("grid width {0} is odd")]
    OddWidth(usize),
}

impl<T: Clone> Grid<T> {
    pub fn filled(width: usize, height: usize, value: T) -> Self {
        Self {
            width,
            height,
            data: vec![value; width * height],
        }
    }
}

impl<T> Grid<T> {
    pub fn from_vec(width: usize, height: usize, data: Vec<T>) -> Result<Self, GridError> {
        if data.len() != width * height {
            return Err(GridError::BadLength {
                width,
                height,
                len: data.len(),
            });
        }
        Ok(Self {
            width,
            height,
            data,
        })
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut data = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                data.push(f(x, y));
            }
        }
        Self {
            width,
            height,
            data,
        }
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.data.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> &T {
        &self.data[y * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, value: T) {
        self.data[y * self.width + x] = value;
    }

    #[inline]
    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    #[inline]
    pub fn as_mut_slice(&mut self) -> &mut [T] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<T> {
        self.data
    }

    pub fn map<U>(&self, f: impl FnMut(&T) -> U) -> Grid<U> {
        Grid {
            width: self.width,
            height: self.height,
            data: self.data.iter().map(f).collect(),
        }
    }

    /// Errors unless `other` has the same width and height.
    pub fn ensure_same_dims<U>(&self, other: &Grid<U>) -> Result<(), GridError> {
        if self.dims() == other.dims() {
            Ok(())
        } else {
            Err(GridError::DimensionMismatch {
                left_w: self.width,
                left_h: self.height,
                right_w: other.width,
                right_h: other.height,
            })
        }
    }
}

impl Mask {
    pub fn count(&self) -> usize {
        self.data.iter().filter(|&&b| b).count()
    }

    pub fn not(&self) -> Mask {
        self.map(|&b| !b)
    }

    pub fn and(&self, other: &Mask) -> Result<Mask, GridError> {
        self.zip_with(other, |a, b| a && b)
    }

    pub fn or(&self, other: &Mask) -> Result<Mask, GridError> {
        self.zip_with(other, |a, b| a || b)
    }

    fn zip_with(&self, other: &Mask, f: impl Fn(bool, bool) -> bool) -> Result<Mask, GridError> {
        self.ensure_same_dims(other)?;
        Ok(Grid {
            width: self.width,
            height: self.height,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        })
    }

    /// True where `self` is set implies `other` is set.
    pub fn is_subset_of(&self, other: &Mask) -> bool {
        self.dims() == other.dims() && self.data.iter().zip(&other.data).all(|(&a, &b)| !a || b)
    }

    /// Binary dilation with a square structuring element of Chebyshev radius `radius`.
    pub fn dilate(&self, radius: usize) -> Mask {
        if radius == 0 {
            return self.clone();
        }
        let (w, h) = self.dims();
        let r = radius as isize;
        Grid::from_fn(w, h, |x, y| {
            let (x, y) = (x as isize, y as isize);
            for ny in (y - r).max(0)..=(y + r).min(h as isize - 1) {
                for nx in (x - r).max(0)..=(x + r).min(w as isize - 1) {
                    if *self.get(nx as usize, ny as usize) {
                        return true;
                    }
                }
            }
            false
        })
    }
}

/// Horizontal 1x2 concatenation: `left` occupies columns `0..w`, `right`
/// columns `w..2w`.
pub fn compose_grid<T: Clone>(left: &Grid<T>, right: &Grid<T>) -> Result<Grid<T>, GridError> {
    left.ensure_same_dims(right)?;
    let (w, h) = left.dims();
    let mut data = Vec::with_capacity(2 * w * h);
    for y in 0..h {
        data.extend_from_slice(&left.data[y * w..(y + 1) * w]);
        data.extend_from_slice(&right.data[y * w..(y + 1) * w]);
    }
    Ok(Grid {
        width: 2 * w,
        height: h,
        data,
    })
}

/// Inverse of [`compose_grid`].
pub fn split_grid<T: Clone>(grid: &Grid<T>) -> Result<(Grid<T>, Grid<T>), GridError> {
    if !grid.width.is_multiple_of(2) {
        return Err(GridError::OddWidth(grid.width));
    }
    let half = grid.width / 2;
    let h = grid.height;
    let mut left = Vec::with_capacity(half * h);
    let mut right = Vec::with_capacity(half * h);
    for row in grid.data.chunks_exact(grid.width.max(1)).take(h) {
        left.extend_from_slice(&row[..half]);
        right.extend_from_slice(&row[half..]);
    }
    Ok((
        Grid {
            width: half,
            height: h,
            data: left,
        },
        Grid {
            width: half,
            height: h,
            data: right,
        },
    ))
}

/// Rec. 709 luma of a linear RGB triple.
#[inline]
pub fn luminance(c: Rgb) -> f32 {
    0.2126 * c[0] + 0.7152 * c[1] + 0.0722 * c[2]
}
