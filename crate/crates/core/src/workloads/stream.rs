use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{partition, Element, WorkloadError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StreamOp {
    /// `c[i] = a[i]`
    Copy,
    /// `a[i] = b[i] + s * c[i]`
    Triad,
}

impl StreamOp {
    pub fn as_str(self) -> &'static str {
        match self {
            StreamOp::Copy => "copy",
            StreamOp::Triad => "triad",
        }
    }

    /// Arrays touched per element.
    pub fn arrays(self) -> u64 {
        match self {
            StreamOp::Copy => 2,
            StreamOp::Triad => 3,
        }
    }
}

impl fmt::Display for StreamOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for StreamOp {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "copy" => Ok(StreamOp::Copy),
            "triad" => Ok(StreamOp::Triad),
            _ => Err(format!("unknown stream op `{s}` (copy, triad)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StreamResult {
    pub op: StreamOp,
    pub elen_bits: u32,
    pub n: usize,
    pub bytes: u64,
    pub checksum: f64,
}

pub const DEFAULT_SCALAR: f64 = 3.0;

fn alloc<T: Element>(n: usize, f: impl Fn(usize) -> f64) -> Result<Vec<T>, WorkloadError> {
    let mut v = Vec::new();
    v.try_reserve_exact(n)
        .map_err(|_| WorkloadError::Resource(format!("{n} elements of {} bits", T::BITS)))?;
    v.extend((0..n).map(|i| T::from_f64(f(i))));
    Ok(v)
}

/// The three STREAM arrays. Initial values are small integers, exact in
/// every supported width, so checksums are independent of summation order.
#[derive(Debug, Clone)]
pub struct StreamArrays<T> {
    pub a: Vec<T>,
    pub b: Vec<T>,
    pub c: Vec<T>,
    pub scalar: T,
}

impl<T: Element> StreamArrays<T> {
    pub fn new(n: usize, scalar: f64) -> Result<Self, WorkloadError> {
        if n == 0 {
            return Err(WorkloadError::InvalidArgument("stream length must be >= 1".into()));
        }
        Ok(Self {
            a: alloc(n, |i| (i % 8 + 1) as f64)?,
            b: alloc(n, |i| (i % 5 + 1) as f64)?,
            c: alloc(n, |i| (i % 3 + 1) as f64)?,
            scalar: T::from_f64(scalar),
        })
    }

    pub fn len(&self) -> usize {
        self.a.len()
    }

    pub fn is_empty(&self) -> bool {
        self.a.is_empty()
    }

    /// Runs `op` once and returns the sum of the destination array.
    pub fn run(&mut self, op: StreamOp, threads: u32) -> f64 {
        let ranges = partition(self.len(), threads as usize);
        let s = self.scalar;
        let (a, b, c) = (&mut self.a, &self.b, &mut self.c);
        match op {
            StreamOp::Copy => {
                par_zip(c, a, &ranges, |dst, src| dst.copy_from_slice(src));
                sum(c)
            }
            StreamOp::Triad => {
                let c: &[T] = c;
                split_mut_by(a, &ranges, |r, dst| {
                    for ((d, bi), ci) in dst.iter_mut().zip(&b[r.clone()]).zip(&c[r]) {
                        *d = *bi + s * *ci;
                    }
                });
                sum(a)
            }
        }
    }
}

fn sum<T: Element>(v: &[T]) -> f64 {
    v.iter().map(|x| x.to_f64()).sum()
}

fn split_mut_by<T: Send>(
    v: &mut [T],
    ranges: &[std::ops::Range<usize>],
    f: impl Fn(std::ops::Range<usize>, &mut [T]) + Sync,
) {
    if ranges.len() <= 1 {
        let len = v.len();
        f(0..len, v);
        return;
    }
    std::thread::scope(|s| {
        let mut rest = v;
        for r in ranges {
            let (chunk, tail) = rest.split_at_mut(r.len());
            rest = tail;
            let f = &f;
            s.spawn(move || f(r.clone(), chunk));
        }
    });
}

fn par_zip<T: Element>(
    dst: &mut [T],
    src: &[T],
    ranges: &[std::ops::Range<usize>],
    f: impl Fn(&mut [T], &[T]) + Sync,
) {
    split_mut_by(dst, ranges, |r, d| f(d, &src[r]));
}

/// Width-erased arrays for the widths this build supports.
pub(crate) enum AnyStream {
    F64(StreamArrays<f64>),
    F32(StreamArrays<f32>),
    #[cfg(feature = "fp16")]
    F16(StreamArrays<half::f16>),
}

impl AnyStream {
    pub(crate) fn new(n: usize, elen_bits: u32, scalar: f64) -> Result<Self, WorkloadError> {
        match elen_bits {
            64 => Ok(AnyStream::F64(StreamArrays::new(n, scalar)?)),
            32 => Ok(AnyStream::F32(StreamArrays::new(n, scalar)?)),
            #[cfg(feature = "fp16")]
            16 => Ok(AnyStream::F16(StreamArrays::new(n, scalar)?)),
            #[cfg(not(feature = "fp16"))]
            16 => Err(WorkloadError::Unsupported(
                "half-precision kernels are not compiled in (enable the `fp16` feature)".into(),
            )),
            e => Err(WorkloadError::InvalidArgument(format!(
                "stream element width must be 16, 32 or 64, got {e}"
            ))),
        }
    }

    pub(crate) fn run(&mut self, op: StreamOp, threads: u32) -> f64 {
        match self {
            AnyStream::F64(s) => s.run(op, threads),
            AnyStream::F32(s) => s.run(op, threads),
            #[cfg(feature = "fp16")]
            AnyStream::F16(s) => s.run(op, threads),
        }
    }
}

/// One pass of `op` over fresh arrays of `n` elements.
pub fn stream_kernel(n: usize, elen_bits: u32, op: StreamOp) -> Result<StreamResult, WorkloadError> {
    let mut arrays = AnyStream::new(n, elen_bits, DEFAULT_SCALAR)?;
    let checksum = arrays.run(op, 1);
    Ok(StreamResult {
        op,
        elen_bits,
        n,
        bytes: op.arrays() * n as u64 * u64::from(elen_bits) / 8,
        checksum,
    })
}
