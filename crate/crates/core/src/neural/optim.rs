use super::{HyperParams, Params, PAD};

/// One RMSprop step, in place:
/// `cache = decay * cache + (1 - decay) * grad^2`,
/// `param -= lr * grad / (sqrt(cache) + eps)`.
pub fn rmsprop_update(
    param: &mut [f64],
    grad: &[f64],
    cache: &mut [f64],
    lr: f64,
    decay: f64,
    eps: f64,
) {
    assert_eq!(param.len(), grad.len());
    assert_eq!(param.len(), cache.len());
    for ((p, &g), c) in param.iter_mut().zip(grad).zip(cache.iter_mut()) {
        *c = decay * *c + (1.0 - decay) * g * g;
        *p -= lr * g / (c.sqrt() + eps);
    }
}

/// Running squared-gradient averages for every parameter group.
#[derive(Clone, Debug)]
pub struct RmsProp {
    cache: Params,
    lr: f64,
    decay: f64,
    eps: f64,
}

impl RmsProp {
    pub fn new(hp: &HyperParams) -> Self {
        RmsProp {
            cache: Params::zeros(hp),
            lr: hp.learning_rate,
            decay: hp.rmsprop_decay,
            eps: hp.rmsprop_eps,
        }
    }

    pub fn step(&mut self, params: &mut Params, grad: &Params, emb_dim: usize) {
        let (lr, decay, eps) = (self.lr, self.decay, self.eps);
        let pad = PAD * emb_dim..(PAD + 1) * emb_dim;
        // padding row is frozen
        rmsprop_update(
            &mut params.embedding[..pad.start],
            &grad.embedding[..pad.start],
            &mut self.cache.embedding[..pad.start],
            lr,
            decay,
            eps,
        );
        rmsprop_update(
            &mut params.embedding[pad.end..],
            &grad.embedding[pad.end..],
            &mut self.cache.embedding[pad.end..],
            lr,
            decay,
            eps,
        );
        let caches = self.cache.groups_mut();
        let grads = grad.groups();
        for (i, (p, c)) in params
            .groups_mut()
            .into_iter()
            .zip(caches)
            .enumerate()
            .skip(1)
        {
            rmsprop_update(p, grads[i], c, lr, decay, eps);
        }
    }
}
