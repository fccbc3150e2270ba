//! Attribute-vector construction for user and tweet nodes.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{GraphStructure, NodeKind, TweetRecord, UserRecord, VectorDims};
use crate::linalg;
use crate::rng::fnv1a64;

pub const N_SCALARS: usize = 6;
const N_COUNTS: usize = 5;

/// Attribute slots in their fixed sequence order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum AttributeTag {
    UserScalars,
    Description,
    Text,
    Image,
    AuthorScalars,
    AuthorDescription,
}

impl AttributeTag {
    pub const ALL: [AttributeTag; 6] = [
        AttributeTag::UserScalars,
        AttributeTag::Description,
        AttributeTag::Text,
        AttributeTag::Image,
        AttributeTag::AuthorScalars,
        AttributeTag::AuthorDescription,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn input_dim(self, dims: VectorDims) -> usize {
        match self {
            AttributeTag::UserScalars | AttributeTag::AuthorScalars => N_SCALARS,
            AttributeTag::Description | AttributeTag::Text | AttributeTag::AuthorDescription => dims.text_dim,
            AttributeTag::Image => dims.image_dim,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AttributeSet {
    pub kind: NodeKind,
    pub attributes: Vec<(AttributeTag, Vec<f64>)>,
}

impl AttributeSet {
    pub fn len(&self) -> usize {
        self.attributes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.attributes.is_empty()
    }

    pub fn get(&self, tag: AttributeTag) -> Option<&[f64]> {
        self.attributes
            .iter()
            .find(|(t, _)| *t == tag)
            .map(|(_, v)| v.as_slice())
    }
}

/// Mean and standard deviation of `log1p(count)` for the five count features.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalarNormalizer {
    pub mean: [f64; N_COUNTS],
    pub std: [f64; N_COUNTS],
}

fn counts(u: &UserRecord) -> [f64; N_COUNTS] {
    [
        u.followers as f64,
        u.friends as f64,
        u.listed as f64,
        u.statuses as f64,
        u.favorites as f64,
    ]
}

pub fn fit_normalizer(users: &[UserRecord]) -> Result<ScalarNormalizer> {
    if users.is_empty() {
        return Err(Error::Invalid("cannot fit a normalizer on zero users".into()));
    }
    let mut mean = [0.0; N_COUNTS];
    let mut std = [0.0; N_COUNTS];
    for f in 0..N_COUNTS {
        let col: Vec<f64> = users.iter().map(|u| counts(u)[f].ln_1p()).collect();
        let (m, s) = linalg::mean_std(&col);
        mean[f] = m;
        std[f] = if s > 1e-12 { s } else { 1.0 };
    }
    Ok(ScalarNormalizer { mean, std })
}

impl ScalarNormalizer {
    /// `[z(followers), z(friends), z(listed), z(statuses), z(favorites), verified]`
    pub fn transform(&self, u: &UserRecord) -> Vec<f64> {
        let c = counts(u);
        let mut out = Vec::with_capacity(N_SCALARS);
        for f in 0..N_COUNTS {
            out.push((c[f].ln_1p() - self.mean[f]) / self.std[f]);
        }
        out.push(if u.verified { 1.0 } else { 0.0 });
        out
    }
}

/// Lowercases, drops everything that is not alphanumeric, splits on whitespace.
pub fn tokenize(text: &str) -> Vec<String> {
    let cleaned: String = text
        .chars()
        .flat_map(char::to_lowercase)
        .map(|c| if c.is_alphanumeric() || c.is_whitespace() { c } else { ' ' })
        .collect();
    cleaned.split_whitespace().map(str::to_owned).collect()
}

/// Signed feature hashing of a bag of words, L2-normalised when non-zero.
pub fn hash_embed(text: &str, dim: usize, seed: u64) -> Vec<f64> {
    assert!(dim >= 1, "hash_embed needs dim >= 1");
    let mut v = vec![0.0; dim];
    let seed_bytes = seed.to_le_bytes();
    for tok in tokenize(text) {
        let mut bytes = Vec::with_capacity(8 + tok.len());
        bytes.extend_from_slice(&seed_bytes);
        bytes.extend_from_slice(tok.as_bytes());
        let h = crate::rng::splitmix64(fnv1a64(&bytes));
        let bucket = (h % dim as u64) as usize;
        let sign = if h >> 63 == 0 { 1.0 } else { -1.0 };
        v[bucket] += sign;
    }
    let n = linalg::norm(&v);
    if n > 0.0 {
        for x in &mut v {
            *x /= n;
        }
    }
    v
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EncoderConfig {
    pub text_dim: usize,
    pub image_dim: usize,
    pub hash_seed: u64,
}

impl Default for EncoderConfig {
    fn default() -> Self {
        EncoderConfig {
            text_dim: 384,
            image_dim: 2048,
            hash_seed: 0,
        }
    }
}

impl EncoderConfig {
    pub fn dims(&self) -> VectorDims {
        VectorDims {
            text_dim: self.text_dim,
            image_dim: self.image_dim,
        }
    }
}

/// Text encoder that prefers precomputed vectors and falls back to hashing.
#[derive(Debug, Clone, Copy)]
pub struct TextEncoder {
    pub dim: usize,
    pub seed: u64,
}

impl TextEncoder {
    pub fn encode(&self, precomputed: Option<&Vec<f64>>, text: Option<&str>) -> Option<Vec<f64>> {
        if let Some(v) = precomputed {
            return Some(v.clone());
        }
        match text {
            Some(t) if !tokenize(t).is_empty() => Some(hash_embed(t, self.dim, self.seed)),
            _ => None,
        }
    }
}

pub fn encode_user(record: &UserRecord, normalizer: &ScalarNormalizer, text: &TextEncoder) -> AttributeSet {
    let mut attributes = vec![(AttributeTag::UserScalars, normalizer.transform(record))];
    if let Some(d) = text.encode(record.description_vec.as_ref(), record.description_text.as_deref()) {
        attributes.push((AttributeTag::Description, d));
    }
    AttributeSet {
        kind: NodeKind::User,
        attributes,
    }
}

pub fn encode_tweet(record: &TweetRecord, author: &AttributeSet, text: &TextEncoder) -> Result<AttributeSet> {
    let t = text
        .encode(record.text_vec.as_ref(), record.text.as_deref())
        .ok_or_else(|| Error::Invalid(format!("tweet {} has neither text nor text vector", record.external_id)))?;
    let mut attributes = vec![(AttributeTag::Text, t)];
    if let Some(img) = &record.image_vec {
        attributes.push((AttributeTag::Image, img.clone()));
    }
    for (tag, v) in &author.attributes {
        match tag {
            AttributeTag::UserScalars => attributes.push((AttributeTag::AuthorScalars, v.clone())),
            AttributeTag::Description => attributes.push((AttributeTag::AuthorDescription, v.clone())),
            _ => {}
        }
    }
    Ok(AttributeSet {
        kind: NodeKind::Tweet,
        attributes,
    })
}

/// Attribute sets for every node, indexed by global node index.
#[derive(Debug, Clone)]
pub struct EncodedNodes {
    pub sets: Vec<AttributeSet>,
    pub normalizer: ScalarNormalizer,
}

pub fn encode_graph(graph: &GraphStructure, config: &EncoderConfig) -> Result<EncodedNodes> {
    let normalizer = fit_normalizer(graph.users())?;
    let text = TextEncoder {
        dim: config.text_dim,
        seed: config.hash_seed,
    };
    let mut sets: Vec<AttributeSet> = graph
        .users()
        .iter()
        .map(|u| encode_user(u, &normalizer, &text))
        .collect();
    for (i, t) in graph.tweets().iter().enumerate() {
        let author = graph.author_of(i as u32) as usize;
        let set = encode_tweet(t, &sets[author], &text)?;
        sets.push(set);
    }
    for s in &sets {
        for (tag, v) in &s.attributes {
            let want = tag.input_dim(config.dims());
            if v.len() != want {
                return Err(Error::Dimension(format!(
                    "{tag:?} vector has length {}, expected {want}",
                    v.len()
                )));
            }
        }
    }
    Ok(EncodedNodes { sets, normalizer })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn user(followers: u64, verified: bool, desc: Option<&str>) -> UserRecord {
        UserRecord {
            external_id: "u".into(),
            followers,
            friends: 5,
            listed: 5,
            statuses: 5,
            favorites: 5,
            verified,
            description_text: desc.map(str::to_owned),
            description_vec: None,
            synthetic: false,
        }
    }

    #[test]
    fn normalizer_matches_log1p_oracle() {
        let users = [user(0, false, None), user(9, false, None), user(99, false, None)];
        let n = fit_normalizer(&users).unwrap();
        // ln(1)=0, ln(10)=2.302585092994046, ln(100)=4.605170185988092
        assert!((n.mean[0] - 2.302_585_092_994_046).abs() < 1e-12);
        assert!(n.transform(&users[1])[0].abs() < 1e-12);
        // constant feature: std falls back to 1
        assert_eq!(n.std[1], 1.0);
        assert!(n.transform(&users[0])[1].abs() < 1e-12);
    }

    #[test]
    fn normalizer_edge_cases() {
        assert!(fit_normalizer(&[]).is_err());
        let single = [user(42, false, None)];
        let n = fit_normalizer(&single).unwrap();
        assert!(n.transform(&single[0])[..5].iter().all(|z| z.abs() < 1e-12));
    }

    #[test]
    fn fitted_population_has_zero_mean() {
        let users: Vec<UserRecord> = (0..17).map(|i| user(i * i * 13, i % 3 == 0, None)).collect();
        let n = fit_normalizer(&users).unwrap();
        for f in 0..5 {
            let m: f64 = users.iter().map(|u| n.transform(u)[f]).sum::<f64>() / users.len() as f64;
            assert!(m.abs() < 1e-9);
        }
    }

    #[test]
    fn user_attributes() {
        let enc = TextEncoder { dim: 16, seed: 1 };
        let n = fit_normalizer(&[user(1, true, None)]).unwrap();
        let a = encode_user(&user(1, true, None), &n, &enc);
        assert_eq!(a.len(), 1);
        assert_eq!(a.attributes[0].1[5], 1.0);
        let b = encode_user(&user(1, true, Some("hello world")), &n, &enc);
        assert_eq!(b.len(), 2);

        let mut with_vec = user(1, false, None);
        with_vec.description_vec = Some(vec![0.5; 384]);
        let c = encode_user(&with_vec, &n, &TextEncoder { dim: 384, seed: 0 });
        assert_eq!(c.get(AttributeTag::Description).unwrap().len(), 384);
    }

    #[test]
    fn tweet_attributes() {
        let enc = TextEncoder { dim: 16, seed: 1 };
        let n = fit_normalizer(&[user(1, false, Some("bio"))]).unwrap();
        let author = encode_user(&user(1, false, Some("bio")), &n, &enc);
        let mut t = TweetRecord {
            external_id: "t".into(),
            author_external_id: "u".into(),
            text: Some("prices up".into()),
            has_image: true,
            author: None,
            text_vec: None,
            image_vec: Some(vec![0.1; 2048]),
        };
        let full = encode_tweet(&t, &author, &enc).unwrap();
        assert_eq!(full.len(), 4);
        let order: Vec<AttributeTag> = full.attributes.iter().map(|(t, _)| *t).collect();
        assert_eq!(
            order,
            vec![
                AttributeTag::Text,
                AttributeTag::Image,
                AttributeTag::AuthorScalars,
                AttributeTag::AuthorDescription
            ]
        );
        t.image_vec = None;
        let no_img = encode_tweet(&t, &author, &enc).unwrap();
        assert_eq!(no_img.len(), 3);
        let other = encode_tweet(&t, &author, &enc).unwrap();
        assert_eq!(no_img.get(AttributeTag::AuthorScalars), other.get(AttributeTag::AuthorScalars));
        t.text = None;
        assert!(encode_tweet(&t, &author, &enc).is_err());
    }

    #[test]
    fn hash_embed_basics() {
        assert_eq!(hash_embed("Hello, world!", 32, 3), hash_embed("Hello, world!", 32, 3));
        assert!(hash_embed("", 32, 3).iter().all(|&x| x == 0.0));
        assert!(hash_embed("...", 32, 3).iter().all(|&x| x == 0.0));
        assert_eq!(hash_embed("HELLO world", 32, 3), hash_embed("hello, world", 32, 3));
    }

    proptest! {
        #[test]
        fn hash_embed_is_unit_norm_and_order_free(words in proptest::collection::vec("[a-z]{1,8}", 1..12), dim in 1usize..64) {
            let text = words.join(" ");
            let v = hash_embed(&text, dim, 9);
            let n = linalg::norm(&v);
            // signed buckets can cancel exactly
            prop_assert!(n == 0.0 || (n - 1.0).abs() < 1e-6);
            let mut rev = words.clone();
            rev.reverse();
            prop_assert_eq!(v, hash_embed(&rev.join(" "), dim, 9));
        }
    }
}
