use std::ops::Range;

use rand::Rng;

use super::{NetConfig, NetError, Real};

/// Named tensors, in the fixed storage (and checkpoint) order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Tensor {
    /// `4H x (H + X)`; row blocks are the input, forget, output and candidate gates.
    LstmWeight,
    LstmBias,
    Fc1Weight,
    Fc1Bias,
    Fc2Weight,
    Fc2Bias,
    PolicyWeight,
    PolicyBias,
    ValueWeight,
    ValueBias,
}

impl Tensor {
    pub const ALL: [Tensor; 10] = [
        Tensor::LstmWeight,
        Tensor::LstmBias,
        Tensor::Fc1Weight,
        Tensor::Fc1Bias,
        Tensor::Fc2Weight,
        Tensor::Fc2Bias,
        Tensor::PolicyWeight,
        Tensor::PolicyBias,
        Tensor::ValueWeight,
        Tensor::ValueBias,
    ];

    pub fn is_lstm(self) -> bool {
        matches!(self, Tensor::LstmWeight | Tensor::LstmBias)
    }

    /// `(rows, cols)`; biases have one column.
    pub fn shape(self, cfg: &NetConfig) -> (usize, usize) {
        let h = cfg.lstm_hidden;
        let [f1, f2] = cfg.fc_widths;
        match self {
            Tensor::LstmWeight => (4 * h, cfg.lstm_input()),
            Tensor::LstmBias => (4 * h, 1),
            Tensor::Fc1Weight => (f1, cfg.encoded_dim()),
            Tensor::Fc1Bias => (f1, 1),
            Tensor::Fc2Weight => (f2, f1),
            Tensor::Fc2Bias => (f2, 1),
            Tensor::PolicyWeight => (cfg.action_count, f2),
            Tensor::PolicyBias => (cfg.action_count, 1),
            Tensor::ValueWeight => (1, f2),
            Tensor::ValueBias => (1, 1),
        }
    }
}

/// Offsets of every tensor inside the flat parameter vector.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Layout {
    ranges: [Range<usize>; 10],
    total: usize,
}

impl Layout {
    pub fn new(cfg: &NetConfig) -> Self {
        let mut offset = 0;
        let ranges = Tensor::ALL.map(|t| {
            let (r, c) = t.shape(cfg);
            let range = offset..offset + r * c;
            offset += r * c;
            range
        });
        Self { ranges, total: offset }
    }

    pub fn range(&self, t: Tensor) -> Range<usize> {
        self.ranges[t as usize].clone()
    }

    pub fn len(&self) -> usize {
        self.total
    }

    pub fn is_empty(&self) -> bool {
        self.total == 0
    }
}

/// All trainable weights, stored flat in [`Tensor::ALL`] order.
///
/// The same type doubles as a gradient container ([`Gradients`]), co-shaped with the parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct NetParams<T> {
    config: NetConfig,
    layout: Layout,
    data: Vec<T>,
}

pub type Gradients<T> = NetParams<T>;

impl<T: Real> NetParams<T> {
    pub fn zeros(config: NetConfig) -> Result<Self, NetError> {
        config.validate()?;
        let layout = Layout::new(&config);
        let data = vec![T::zero(); layout.len()];
        Ok(Self { config, layout, data })
    }

    /// Glorot-uniform matrices, zero biases, forget-gate bias of one.
    pub fn init<R: Rng + ?Sized>(config: NetConfig, rng: &mut R) -> Result<Self, NetError> {
        let mut p = Self::zeros(config)?;
        let h = config.lstm_hidden;
        for t in Tensor::ALL {
            let (rows, cols) = t.shape(&config);
            if cols == 1 {
                continue;
            }
            // LSTM gates are initialised as four separate h x (h + x) matrices
            let fan_out = if t == Tensor::LstmWeight { h } else { rows };
            let limit = (6.0 / (cols + fan_out) as f64).sqrt();
            for w in p.tensor_mut(t) {
                *w = T::from_f64(rng.random_range(-limit..limit)).expect("finite");
            }
        }
        for b in &mut p.tensor_mut(Tensor::LstmBias)[h..2 * h] {
            *b = T::one();
        }
        Ok(p)
    }

    pub fn from_vec(config: NetConfig, data: Vec<T>) -> Result<Self, NetError> {
        config.validate()?;
        let layout = Layout::new(&config);
        if data.len() != layout.len() {
            return Err(NetError::ShapeMismatch {
                expected: layout.len(),
                got: data.len(),
            });
        }
        Ok(Self { config, layout, data })
    }

    pub fn config(&self) -> &NetConfig {
        &self.config
    }

    pub fn layout(&self) -> &Layout {
        &self.layout
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [T] {
        &mut self.data
    }

    pub fn tensor(&self, t: Tensor) -> &[T] {
        &self.data[self.layout.range(t)]
    }

    pub fn tensor_mut(&mut self, t: Tensor) -> &mut [T] {
        let r = self.layout.range(t);
        &mut self.data[r]
    }

    pub fn same_shape(&self, other: &NetParams<impl Real>) -> bool {
        self.config == other.config
    }

    pub fn fill_zero(&mut self) {
        self.data.iter_mut().for_each(|x| *x = T::zero());
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|x| x.is_finite())
    }

    /// `self += alpha * other`
    pub fn add_scaled(&mut self, alpha: T, other: &Self) {
        super::linalg::axpy(alpha, &other.data, &mut self.data);
    }

    pub fn scale(&mut self, k: T) {
        self.data.iter_mut().for_each(|x| *x = *x * k);
    }

    pub fn l2_norm(&self) -> T {
        self.data.iter().map(|&x| x * x).sum::<T>().sqrt()
    }

    /// Converts every element to another float width.
    pub fn cast<U: Real>(&self) -> NetParams<U> {
        NetParams {
            config: self.config,
            layout: self.layout.clone(),
            data: self
                .data
                .iter()
                .map(|x| U::from_f64(x.to_f64().expect("float")).expect("float"))
                .collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn tiny() -> NetConfig {
        NetConfig {
            lstm_hidden: 3,
            fc_widths: [4, 4],
            ..NetConfig::default()
        }
    }

    #[test]
    fn layout_is_contiguous() {
        let cfg = tiny();
        let layout = Layout::new(&cfg);
        let mut end = 0;
        for t in Tensor::ALL {
            let r = layout.range(t);
            assert_eq!(r.start, end);
            let (rows, cols) = t.shape(&cfg);
            assert_eq!(r.len(), rows * cols);
            end = r.end;
        }
        assert_eq!(end, layout.len());
        // 4*3*(3+7) + 12 + 4*7 + 4 + 16 + 4 + 12*4 + 12 + 4 + 1
        assert_eq!(layout.len(), 249);
    }

    #[test]
    fn default_size() {
        let n = Layout::new(&NetConfig::default()).len();
        assert_eq!(
            n,
            4 * 64 * 71 + 256 + 256 * 68 + 256 + 256 * 256 + 256 + 12 * 256 + 12 + 256 + 1
        );
    }

    #[test]
    fn init_is_reproducible_and_bounded() {
        let a: NetParams<f32> = NetParams::init(tiny(), &mut ChaCha8Rng::seed_from_u64(11)).unwrap();
        let b: NetParams<f32> = NetParams::init(tiny(), &mut ChaCha8Rng::seed_from_u64(11)).unwrap();
        assert_eq!(a, b);
        let limit = (6.0f32 / (10 + 3) as f32).sqrt();
        assert!(a.tensor(Tensor::LstmWeight).iter().all(|w| w.abs() <= limit));
        let lstm_b = a.tensor(Tensor::LstmBias);
        assert!(lstm_b[..3].iter().all(|&x| x == 0.0));
        assert!(lstm_b[3..6].iter().all(|&x| x == 1.0));
        assert!(lstm_b[6..].iter().all(|&x| x == 0.0));
        assert!(a.tensor(Tensor::Fc1Bias).iter().all(|&x| x == 0.0));
    }

    #[test]
    fn from_vec_checks_length() {
        assert!(NetParams::<f32>::from_vec(tiny(), vec![0.0; 10]).is_err());
        assert!(NetParams::<f32>::from_vec(tiny(), vec![0.0; 249]).is_ok());
    }

    #[test]
    fn zero_dimension_rejected() {
        let cfg = NetConfig {
            lstm_hidden: 0,
            ..NetConfig::default()
        };
        assert!(NetParams::<f32>::zeros(cfg).is_err());
    }
}
