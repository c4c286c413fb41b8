use std::time::Duration;

use serde::Deserialize;

use super::http::{post_json, ServiceConfig};
use crate::error::{Error, Result};

pub const DEFAULT_DIM: usize = 256;
pub const EMBED_URL_VAR: &str = "OPSKB_EMBED_URL";

/// Maps texts into a fixed vector space. Vectors are L2-normalized.
pub trait Embedder: Send + Sync {
    /// Identity tag recorded next to every stored vector and score.
    fn tag(&self) -> String;

    fn embed_batch(&self, texts: &[String]) -> Result<Vec<Vec<f64>>>;

    fn embed(&self, text: &str) -> Result<Vec<f64>> {
        let mut v = self.embed_batch(&[text.to_string()])?;
        v.pop()
            .ok_or_else(|| Error::Consistency("embedder returned no vector".into()))
    }
}

pub fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb: f64 = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        0.0
    } else {
        (dot / (na * nb)).clamp(-1.0, 1.0)
    }
}

fn normalize(v: &mut [f64]) -> bool {
    let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if n == 0.0 || !n.is_finite() {
        return false;
    }
    v.iter_mut().for_each(|x| *x /= n);
    true
}

/// Lowercased alphanumeric runs; dotted names split into their segments.
pub fn tokenize(text: &str) -> Vec<String> {
    text.split(|c: char| !(c.is_alphanumeric() || c == '_'))
        .filter(|t| !t.is_empty())
        .map(str::to_lowercase)
        .collect()
}

/// Built-in embedder: term-frequency counts of token unigrams and bigrams,
/// each feature spread over `probes` signed buckets out of `dim`.
#[derive(Debug, Clone)]
pub struct HashedEmbedder {
    pub dim: usize,
    pub seed: u64,
    pub probes: u64,
}

impl Default for HashedEmbedder {
    fn default() -> Self {
        HashedEmbedder {
            dim: DEFAULT_DIM,
            seed: 0x006f_7073_6b62,
            probes: 8,
        }
    }
}

fn fnv1a(seed: u64, parts: &[&str]) -> u64 {
    let mut h = 0xcbf2_9ce4_8422_2325 ^ seed;
    for (i, p) in parts.iter().enumerate() {
        if i > 0 {
            h ^= 0xff;
            h = h.wrapping_mul(0x0000_0100_0000_01b3);
        }
        for b in p.bytes() {
            h ^= b as u64;
            h = h.wrapping_mul(0x0000_0100_0000_01b3);
        }
    }
    // Final avalanche so the low bits used for bucketing are well mixed.
    h ^= h >> 33;
    h = h.wrapping_mul(0xff51_afd7_ed55_8ccd);
    h ^ (h >> 33)
}

impl HashedEmbedder {
    fn vector(&self, text: &str) -> Result<Vec<f64>> {
        if text.trim().is_empty() {
            return Err(Error::Argument("cannot embed empty text".into()));
        }
        let mut tokens = tokenize(text);
        if tokens.is_empty() {
            tokens.push(text.trim().to_string());
        }
        let mut v = vec![0.0; self.dim];
        let mut add = |parts: &[&str]| {
            for p in 0..self.probes {
                let h = fnv1a(self.seed.wrapping_add(p), parts);
                let bucket = (h % self.dim as u64) as usize;
                let sign = if h >> 63 == 0 { 1.0 } else { -1.0 };
                v[bucket] += sign;
            }
        };
        for t in &tokens {
            add(&[t]);
        }
        for w in tokens.windows(2) {
            add(&[&w[0], &w[1]]);
        }
        if !normalize(&mut v) {
            // Every feature cancelled out; fall back to unsigned buckets.
            v.iter_mut().for_each(|x| *x = 0.0);
            for t in &tokens {
                v[(fnv1a(self.seed, &[t]) % self.dim as u64) as usize] += 1.0;
            }
            normalize(&mut v);
        }
        Ok(v)
    }
}

impl Embedder for HashedEmbedder {
    fn tag(&self) -> String {
        format!("hashed-uni-bi-{}x{}-{:x}", self.dim, self.probes, self.seed)
    }

    fn embed_batch(&self, texts: &[String]) -> Result<Vec<Vec<f64>>> {
        texts.iter().map(|t| self.vector(t)).collect()
    }
}

/// Embedder backed by an HTTP service (`POST <base>/embed`).
#[derive(Debug, Clone)]
pub struct HttpEmbedder {
    pub service: ServiceConfig,
}

#[derive(Deserialize)]
struct EmbedResponse {
    vectors: Vec<Vec<f64>>,
}

impl HttpEmbedder {
    pub fn new(base_url: &str) -> HttpEmbedder {
        let base = base_url.trim_end_matches('/');
        let url = if base.ends_with("/embed") {
            base.to_string()
        } else {
            format!("{base}/embed")
        };
        HttpEmbedder {
            service: ServiceConfig::new(url),
        }
    }

    pub fn with_timeout(mut self, timeout: Duration) -> HttpEmbedder {
        self.service.timeout = timeout;
        self
    }
}

impl Embedder for HttpEmbedder {
    fn tag(&self) -> String {
        format!("http:{}", self.service.url)
    }

    fn embed_batch(&self, texts: &[String]) -> Result<Vec<Vec<f64>>> {
        if texts.iter().any(|t| t.trim().is_empty()) {
            return Err(Error::Argument("cannot embed empty text".into()));
        }
        let body = serde_json::json!({ "texts": texts });
        let resp: EmbedResponse = post_json(&self.service, &body)?;
        let bad = |message: String| Error::Service {
            endpoint: self.service.url.clone(),
            message,
            retriable: false,
        };
        if resp.vectors.len() != texts.len() {
            return Err(bad(format!(
                "asked for {} vectors, got {}",
                texts.len(),
                resp.vectors.len()
            )));
        }
        let dim = resp.vectors.first().map_or(0, Vec::len);
        let mut out = resp.vectors;
        for v in &mut out {
            if v.len() != dim || dim == 0 {
                return Err(bad("vectors have inconsistent or zero dimension".into()));
            }
            if !normalize(v) {
                return Err(bad("service returned a zero vector".into()));
            }
        }
        Ok(out)
    }
}

/// The configured embedder: the HTTP service when `OPSKB_EMBED_URL` is set,
/// the built-in one otherwise.
pub fn default_embedder() -> Box<dyn Embedder> {
    match std::env::var(EMBED_URL_VAR) {
        Ok(url) if !url.trim().is_empty() => Box::new(HttpEmbedder::new(&url)),
        _ => Box::new(HashedEmbedder::default()),
    }
}
