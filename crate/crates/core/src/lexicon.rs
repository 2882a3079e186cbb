//! Tokenization, vocabulary, the bundled food lexicon, and embedding files.

use std::collections::{BTreeSet, HashMap};
use std::fs;
use std::path::Path;

use rand::Rng;

use crate::nn::Tensor;

pub const PAD: &str = "<pad>";
pub const UNK: &str = "<unk>";
pub const PAD_ID: usize = 0;
pub const UNK_ID: usize = 1;
pub const EMBED_DIM: usize = 100;
pub const MIN_FOODS: usize = 300;

pub const CUT_ADJECTIVES: [&str; 3] = ["sliced", "diced", "chopped"];
pub const HEAT_ADJECTIVES: [&str; 3] = ["fried", "roasted", "grilled"];

/// The lexicon shipped with the crate.
pub const BUNDLED_FOODS: &str = include_str!("../data/foods.txt");

/// Number of leading lexicon entries the world generator may place in games.
pub const DEFAULT_GAME_FOODS: usize = 100;

#[derive(Debug, thiserror::Error)]
pub enum LexiconError {
    #[error("{path}: line {line}: {reason}")]
    Malformed { path: String, line: usize, reason: String },
    #[error("lexicon has {0} food items, at least {MIN_FOODS} required")]
    TooFewFoods(usize),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Lowercases, splits punctuation into separate tokens, and collapses
/// whitespace. Empty input yields a single pad token.
pub fn tokenize(text: &str) -> Vec<String> {
    let mut out = Vec::new();
    for chunk in text.split_whitespace() {
        if chunk == PAD || chunk == UNK {
            out.push(chunk.to_string());
            continue;
        }
        let mut word = String::new();
        for ch in chunk.to_lowercase().chars() {
            if ch.is_alphanumeric() {
                word.push(ch);
            } else {
                if !word.is_empty() {
                    out.push(std::mem::take(&mut word));
                }
                out.push(ch.to_string());
            }
        }
        if !word.is_empty() {
            out.push(word);
        }
    }
    if out.is_empty() {
        out.push(PAD.to_string());
    }
    out
}

/// Dense token ids: 0 is padding, 1 is the shared unknown token, the rest
/// are sorted so a fixed corpus always produces the same ids.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Vocab {
    tokens: Vec<String>,
    ids: HashMap<String, usize>,
}

impl Vocab {
    pub fn build<'a>(texts: impl IntoIterator<Item = &'a str>) -> Self {
        let mut words = BTreeSet::new();
        for t in texts {
            for tok in tokenize(t) {
                if tok != PAD && tok != UNK {
                    words.insert(tok);
                }
            }
        }
        let tokens: Vec<String> = [PAD.to_string(), UNK.to_string()].into_iter().chain(words).collect();
        let ids = tokens.iter().enumerate().map(|(i, t)| (t.clone(), i)).collect();
        Self { tokens, ids }
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn id(&self, token: &str) -> usize {
        self.ids.get(token).copied().unwrap_or(UNK_ID)
    }

    pub fn token(&self, id: usize) -> &str {
        &self.tokens[id]
    }

    pub fn contains(&self, token: &str) -> bool {
        self.ids.contains_key(token)
    }

    /// Token ids of `text`, truncated to `max_len` (at least one id).
    pub fn encode(&self, text: &str, max_len: usize) -> Vec<usize> {
        let mut ids: Vec<usize> = tokenize(text).iter().map(|t| self.id(t)).collect();
        ids.truncate(max_len.max(1));
        ids
    }

    /// One token per line, in id order.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for t in &self.tokens {
            s.push_str(t);
            s.push('\n');
        }
        s
    }
}

/// Food items plus the state adjectives the engine understands.
#[derive(Clone, Debug)]
pub struct FoodLexicon {
    pub foods: Vec<String>,
    /// Number of leading `foods` entries available to the world generator.
    pub game_foods: usize,
}

impl FoodLexicon {
    pub fn bundled() -> Self {
        Self::parse(BUNDLED_FOODS, "foods.txt").expect("bundled lexicon is valid")
    }

    pub fn load(path: &Path) -> Result<Self, LexiconError> {
        let text = fs::read_to_string(path)?;
        Self::parse(&text, &path.display().to_string())
    }

    /// Parses one item per line, skipping blank lines and `#` comments.
    pub fn parse(text: &str, origin: &str) -> Result<Self, LexiconError> {
        let mut foods = Vec::new();
        let mut seen = BTreeSet::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let name = tokenize(line).join(" ");
            if let Some(bad) = tokenize(line).iter().find(|t| is_state_adjective(t) || RESERVED.contains(&t.as_str())) {
                return Err(LexiconError::Malformed {
                    path: origin.to_string(),
                    line: i + 1,
                    reason: format!("food name uses reserved word {bad:?}"),
                });
            }
            if !seen.insert(name.clone()) {
                return Err(LexiconError::Malformed {
                    path: origin.to_string(),
                    line: i + 1,
                    reason: format!("duplicate food {name:?}"),
                });
            }
            foods.push(name);
        }
        if foods.len() < MIN_FOODS {
            return Err(LexiconError::TooFewFoods(foods.len()));
        }
        let game_foods = DEFAULT_GAME_FOODS.min(foods.len() / 2);
        Ok(Self { foods, game_foods })
    }

    pub fn game_pool(&self) -> &[String] {
        &self.foods[..self.game_foods]
    }

    pub fn augmentation_pool(&self) -> &[String] {
        &self.foods[self.game_foods..]
    }

    pub fn is_game_food(&self, name: &str) -> bool {
        self.game_pool().iter().any(|f| f == name)
    }

    /// Stable digest of the food list, used to key generated datasets.
    pub fn fingerprint(&self) -> String {
        use sha2::{Digest, Sha256};
        let mut h = Sha256::new();
        for f in &self.foods {
            h.update(f.as_bytes());
            h.update(b"\n");
        }
        h.update(self.game_foods.to_le_bytes());
        h.finalize().iter().map(|b| format!("{b:02x}")).collect()
    }
}

/// Words that carry engine meaning and so cannot appear in food names.
const RESERVED: [&str; 14] =
    ["a", "an", "and", "the", "with", "meal", "cookbook", "knife", "stove", "oven", "bbq", "door", "nothing", "some"];

pub fn is_state_adjective(word: &str) -> bool {
    CUT_ADJECTIVES.contains(&word) || HEAT_ADJECTIVES.contains(&word)
}

/// Builds a `vocab.len() x EMBED_DIM` embedding matrix.
///
/// Rows for words found in the GloVe-style text file at `path` are copied;
/// every other row is drawn from `uniform(-0.1, 0.1)`. A missing file (or
/// `None`) gives a fully random matrix.
pub fn load_embeddings<R: Rng>(path: Option<&Path>, vocab: &Vocab, rng: &mut R) -> Result<Tensor, LexiconError> {
    let mut data: Vec<f32> = (0..vocab.len() * EMBED_DIM).map(|_| rng.gen_range(-0.1..0.1)).collect();
    let Some(path) = path.filter(|p| p.exists()) else {
        return Ok(Tensor::matrix(vocab.len(), EMBED_DIM, data));
    };
    let text = fs::read_to_string(path)?;
    let origin = path.display().to_string();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let mut parts = line.split_whitespace();
        let word = parts.next().unwrap();
        let values: Vec<&str> = parts.collect();
        let malformed = |reason: String| LexiconError::Malformed { path: origin.clone(), line: i + 1, reason };
        if values.len() != EMBED_DIM {
            return Err(malformed(format!("expected {EMBED_DIM} values, found {}", values.len())));
        }
        let parsed = values
            .iter()
            .map(|v| v.parse::<f32>().ok().filter(|x| x.is_finite()))
            .collect::<Option<Vec<f32>>>()
            .ok_or_else(|| malformed("non-numeric or non-finite value".into()))?;
        if vocab.contains(word) {
            let id = vocab.id(word);
            data[id * EMBED_DIM..(id + 1) * EMBED_DIM].copy_from_slice(&parsed);
        }
    }
    Ok(Tensor::matrix(vocab.len(), EMBED_DIM, data))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::io::Write;

    #[test]
    fn tokenize_examples() {
        assert_eq!(tokenize("You are hungry!"), vec!["you", "are", "hungry", "!"]);
        assert_eq!(tokenize(""), vec![PAD]);
        assert_eq!(tokenize("   \n\t "), vec![PAD]);
        assert_eq!(tokenize("sliced red hot pepper").len(), 4);
        assert_eq!(tokenize("-= Kitchen =-"), vec!["-", "=", "kitchen", "=", "-"]);
    }

    proptest! {
        #[test]
        fn tokenize_is_idempotent(text in "\\PC{0,60}") {
            let once = tokenize(&text);
            let twice = tokenize(&once.join(" "));
            prop_assert_eq!(once, twice);
        }
    }

    #[test]
    fn vocab_is_deterministic_and_reserves_pad_unk() {
        let a = Vocab::build(["the carrot", "a red apple", "the apple"]);
        let b = Vocab::build(["the apple", "a red apple", "the carrot"]);
        assert_eq!(a.to_text(), b.to_text());
        assert_eq!(a.id(PAD), PAD_ID);
        assert_eq!(a.id(UNK), UNK_ID);
        assert_eq!(a.id("zebra"), UNK_ID);
        assert_ne!(a.id("apple"), UNK_ID);
    }

    #[test]
    fn bundled_lexicon_is_valid() {
        let lex = FoodLexicon::bundled();
        assert!(lex.foods.len() >= MIN_FOODS);
        assert_eq!(lex.game_pool().len(), DEFAULT_GAME_FOODS);
        assert!(lex.foods.iter().any(|f| f == "red hot pepper"));
        assert!(CUT_ADJECTIVES.iter().all(|c| !HEAT_ADJECTIVES.contains(c)));
        assert_eq!(lex.fingerprint(), FoodLexicon::bundled().fingerprint());
    }

    #[test]
    fn lexicon_rejects_small_or_bad_files() {
        assert!(matches!(FoodLexicon::parse("carrot\napple\n", "x"), Err(LexiconError::TooFewFoods(2))));
        let bad = "fried rice\n".to_string();
        assert!(matches!(FoodLexicon::parse(&bad, "x"), Err(LexiconError::Malformed { line: 1, .. })));
    }

    #[test]
    fn embeddings_copy_known_rows() {
        let vocab = Vocab::build(["red hot pepper"]);
        let mut f = tempfile::NamedTempFile::new().unwrap();
        let values: Vec<String> = (0..EMBED_DIM).map(|i| format!("{}", i as f32 / 1000.0)).collect();
        writeln!(f, "pepper {}", values.join(" ")).unwrap();
        writeln!(f, "unrelated {}", values.join(" ")).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let emb = load_embeddings(Some(f.path()), &vocab, &mut rng).unwrap();
        let row = emb.row_slice(vocab.id("pepper"));
        assert_eq!(row[0], 0.0);
        assert_eq!(row[99], 0.099);
        assert_eq!(emb.rows(), vocab.len());
    }

    #[test]
    fn missing_embedding_file_falls_back_to_random() {
        let vocab = Vocab::build(["carrot"]);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let emb = load_embeddings(Some(Path::new("/definitely/not/here.txt")), &vocab, &mut rng).unwrap();
        assert!(emb.data().iter().all(|v| v.abs() <= 0.1));
    }

    #[test]
    fn short_embedding_line_is_rejected_with_position() {
        let vocab = Vocab::build(["carrot"]);
        let mut f = tempfile::NamedTempFile::new().unwrap();
        let full: Vec<String> = (0..EMBED_DIM).map(|_| "0.5".to_string()).collect();
        writeln!(f, "carrot {}", full.join(" ")).unwrap();
        writeln!(f, "pepper {}", full[..99].join(" ")).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let err = load_embeddings(Some(f.path()), &vocab, &mut rng).unwrap_err();
        match err {
            LexiconError::Malformed { line, .. } => assert_eq!(line, 2),
            other => panic!("unexpected error {other}"),
        }
    }
}
