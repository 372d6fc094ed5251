//! Trigonometric test functions `cos(2 pi k.x)`, `sin(2 pi k.x)` with exact
//! derivatives.

use std::f64::consts::PI;

use crate::hamiltonian::Point;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TrigParity {
    Cos,
    Sin,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TestFunction {
    pub k: [i32; 2],
    pub parity: TrigParity,
}

impl TestFunction {
    fn phase(&self, x: &Point) -> f64 {
        2.0 * PI * (self.k[0] as f64 * x[0] + self.k[1] as f64 * x[1])
    }

    pub fn value(&self, x: &Point) -> f64 {
        match self.parity {
            TrigParity::Cos => self.phase(x).cos(),
            TrigParity::Sin => self.phase(x).sin(),
        }
    }

    pub fn gradient(&self, x: &Point) -> Point {
        let th = self.phase(x);
        let f = match self.parity {
            TrigParity::Cos => -th.sin(),
            TrigParity::Sin => th.cos(),
        };
        [
            2.0 * PI * self.k[0] as f64 * f,
            2.0 * PI * self.k[1] as f64 * f,
        ]
    }

    pub fn laplacian(&self, x: &Point) -> f64 {
        let k2 = (self.k[0] * self.k[0] + self.k[1] * self.k[1]) as f64;
        -4.0 * PI * PI * k2 * self.value(x)
    }

    pub fn is_constant(&self) -> bool {
        self.k == [0, 0]
    }
}

/// All modes with `|k|_inf <= K`, one representative per `+-k` pair.
#[derive(Clone, Debug)]
pub struct TrigBasis {
    dim: usize,
    max_freq: i32,
    functions: Vec<TestFunction>,
}

impl TrigBasis {
    pub fn new(dim: usize, max_freq: i32) -> Self {
        let mut functions = vec![TestFunction {
            k: [0, 0],
            parity: TrigParity::Cos,
        }];
        let k1_range = if dim == 2 { -max_freq..=max_freq } else { 0..=0 };
        for k1 in k1_range {
            for k0 in 0..=max_freq {
                let k = [k0, k1];
                let upper_half = k0 > 0 || (k0 == 0 && k1 > 0);
                if !upper_half {
                    continue;
                }
                functions.push(TestFunction { k, parity: TrigParity::Cos });
                functions.push(TestFunction { k, parity: TrigParity::Sin });
            }
        }
        Self {
            dim,
            max_freq,
            functions,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn max_freq(&self) -> i32 {
        self.max_freq
    }

    pub fn functions(&self) -> &[TestFunction] {
        &self.functions
    }

    pub fn len(&self) -> usize {
        self.functions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.functions.is_empty()
    }
}
