use std::collections::HashMap;

use crate::constraint::surface_tokens;
use crate::error::{Error, Result};

pub type TokenId = u32;

pub const PAD: TokenId = 0;
pub const UNK: TokenId = 1;
pub const PROMPT: TokenId = 2;
pub const SEP: TokenId = 3;
pub const EOS: TokenId = 4;

const SPECIALS: [&str; 5] = ["<pad>", "<unk>", "<prompt>", "<sep>", "<eos>"];

/// Token table of the policy. Ids 0..5 are reserved for padding, unknown
/// words, the prompt prefix, the prompt/response separator and end of
/// sequence.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocabulary {
    tokens: Vec<String>,
    index: HashMap<String, TokenId>,
}

impl Vocabulary {
    /// Builds a vocabulary from surface words; duplicates are ignored.
    pub fn new<I, S>(words: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let mut v = Vocabulary {
            tokens: Vec::new(),
            index: HashMap::new(),
        };
        for s in SPECIALS {
            v.insert(s);
        }
        for w in words {
            v.insert(&w.as_ref().to_lowercase());
        }
        v
    }

    fn insert(&mut self, w: &str) {
        if !self.index.contains_key(w) {
            self.index.insert(w.to_string(), self.tokens.len() as TokenId);
            self.tokens.push(w.to_string());
        }
    }

    /// Rebuilds from an ordered token table (as stored in checkpoints).
    pub fn from_table(tokens: Vec<String>) -> Result<Self> {
        if tokens.len() < SPECIALS.len() || tokens[..SPECIALS.len()] != SPECIALS {
            return Err(Error::Mismatch("vocabulary does not start with the reserved tokens".into()));
        }
        let mut index = HashMap::new();
        for (i, t) in tokens.iter().enumerate() {
            if index.insert(t.clone(), i as TokenId).is_some() {
                return Err(Error::Mismatch(format!("duplicate token `{t}`")));
            }
        }
        Ok(Vocabulary { tokens, index })
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    pub fn id(&self, word: &str) -> Option<TokenId> {
        self.index.get(word).copied()
    }

    pub fn token(&self, id: TokenId) -> Option<&str> {
        self.tokens.get(id as usize).map(String::as_str)
    }

    pub fn is_special(id: TokenId) -> bool {
        (id as usize) < SPECIALS.len()
    }

    /// Lowercased surface tokens mapped to ids; unknown words become `<unk>`.
    pub fn encode(&self, text: &str) -> Vec<TokenId> {
        surface_tokens(text)
            .map(|t| self.id(&t.to_lowercase()).unwrap_or(UNK))
            .collect()
    }

    /// Like [`Vocabulary::encode`] but fails on the first unknown word.
    pub fn encode_strict(&self, text: &str) -> Result<Vec<TokenId>> {
        surface_tokens(text)
            .map(|t| {
                self.id(&t.to_lowercase())
                    .ok_or_else(|| Error::Mismatch(format!("token `{t}` is not in the vocabulary")))
            })
            .collect()
    }

    /// Text of the non-special tokens, space separated.
    pub fn decode(&self, ids: &[TokenId]) -> String {
        ids.iter()
            .filter(|&&id| !Self::is_special(id))
            .filter_map(|&id| self.token(id))
            .collect::<Vec<_>>()
            .join(" ")
    }

    /// `<prompt> complex tokens <sep>`.
    pub fn prompt(&self, complex: &str) -> Vec<TokenId> {
        let mut ids = vec![PROMPT];
        ids.extend(self.encode(complex));
        ids.push(SEP);
        ids
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn encodes_and_decodes() {
        let v = Vocabulary::new(["the", "cat", "The"]);
        assert_eq!(v.len(), 7);
        let ids = v.encode("The cat sat.");
        assert_eq!(ids, vec![5, 6, UNK]);
        assert_eq!(v.decode(&[5, 6, EOS]), "the cat");
        assert!(v.encode_strict("the dog").is_err());
        assert_eq!(v.prompt("cat"), vec![PROMPT, 6, SEP]);
    }

    #[test]
    fn table_round_trip() {
        let v = Vocabulary::new(["a", "b"]);
        assert_eq!(Vocabulary::from_table(v.tokens().to_vec()).unwrap(), v);
        assert!(Vocabulary::from_table(vec!["a".into()]).is_err());
    }
}
