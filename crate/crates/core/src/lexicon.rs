//! Mood vocabulary and hypothesis-sentence templates.

use alloc::collections::BTreeSet;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::text::normalize;
use crate::{Error, Result};

pub const PLACEHOLDER: &str = "{term}";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PartOfSpeech {
    Adjective,
    Noun,
    Verb,
}

impl PartOfSpeech {
    pub fn as_str(self) -> &'static str {
        match self {
            PartOfSpeech::Adjective => "adjective",
            PartOfSpeech::Noun => "noun",
            PartOfSpeech::Verb => "verb",
        }
    }

    /// Default sentence pattern for this part of speech.
    pub fn default_template(self) -> &'static str {
        match self {
            PartOfSpeech::Adjective => "This is a {term} song.",
            PartOfSpeech::Noun => "This song is about {term}.",
            PartOfSpeech::Verb => "This song makes you {term}.",
        }
    }
}

impl fmt::Display for PartOfSpeech {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for PartOfSpeech {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match normalize(s).as_str() {
            "adjective" | "adj" => Ok(PartOfSpeech::Adjective),
            "noun" | "n" => Ok(PartOfSpeech::Noun),
            "verb" | "v" => Ok(PartOfSpeech::Verb),
            _ => Err(Error::arg("pos", s.to_string())),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Mood {
    term: String,
    pos: PartOfSpeech,
    template_override: Option<String>,
}

impl Mood {
    /// Builds a mood, normalizing the term.
    pub fn new(term: &str, pos: PartOfSpeech, template_override: Option<&str>) -> Result<Self> {
        let term_n = normalize(term);
        if term_n.is_empty() {
            return Err(Error::InvalidMood {
                term: term.to_string(),
                reason: "empty term",
            });
        }
        if term_n.contains(['\n', '\r']) {
            return Err(Error::InvalidMood {
                term: term.to_string(),
                reason: "term contains a newline",
            });
        }
        let template_override = match template_override.map(str::trim) {
            None | Some("") => None,
            Some(t) => {
                if t.matches(PLACEHOLDER).count() != 1 {
                    return Err(Error::InvalidMood {
                        term: term_n,
                        reason: "template override must contain {term} exactly once",
                    });
                }
                Some(t.to_string())
            }
        };
        Ok(Mood {
            term: term_n,
            pos,
            template_override,
        })
    }

    pub fn term(&self) -> &str {
        &self.term
    }

    pub fn pos(&self) -> PartOfSpeech {
        self.pos
    }

    pub fn template_override(&self) -> Option<&str> {
        self.template_override.as_deref()
    }

    /// Casts the mood into a hypothesis sentence for zero-shot scoring.
    pub fn to_sentence(&self) -> String {
        let template = self
            .template_override
            .as_deref()
            .unwrap_or_else(|| self.pos.default_template());
        template.replacen(PLACEHOLDER, &self.term, 1)
    }
}

/// Free-function form of [`Mood::to_sentence`].
pub fn cast_to_sentence(mood: &Mood) -> String {
    mood.to_sentence()
}

/// Ordered, duplicate-free, nonempty list of moods.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MoodLexicon {
    moods: Vec<Mood>,
}

impl MoodLexicon {
    pub fn new(moods: Vec<Mood>) -> Result<Self> {
        if moods.is_empty() {
            return Err(Error::EmptyLexicon);
        }
        let mut seen = BTreeSet::new();
        for m in &moods {
            if !seen.insert(m.term.as_str()) {
                return Err(Error::DuplicateTerm(m.term.clone()));
            }
        }
        Ok(MoodLexicon { moods })
    }

    pub fn moods(&self) -> &[Mood] {
        &self.moods
    }

    pub fn len(&self) -> usize {
        self.moods.len()
    }

    pub fn is_empty(&self) -> bool {
        self.moods.is_empty()
    }

    pub fn get(&self, term: &str) -> Option<&Mood> {
        let t = normalize(term);
        self.moods.iter().find(|m| m.term == t)
    }

    pub fn terms(&self) -> impl Iterator<Item = &str> {
        self.moods.iter().map(|m| m.term.as_str())
    }

    /// First `n` moods, in order.
    pub fn truncated(&self, n: usize) -> Result<Self> {
        MoodLexicon::new(self.moods.iter().take(n).cloned().collect())
    }

    /// The bundled lexicon. `love` (lyric-leaning) and `chill`
    /// (acoustic-leaning) come first.
    pub fn builtin() -> Self {
        let moods = BUILTIN
            .iter()
            .map(|(t, p, o)| Mood::new(t, *p, *o).expect("builtin lexicon is valid"))
            .collect();
        MoodLexicon::new(moods).expect("builtin lexicon is valid")
    }
}

use PartOfSpeech::{Adjective as A, Noun as N, Verb as V};

const BUILTIN: &[(&str, PartOfSpeech, Option<&str>)] = &[
    ("love", N, None),
    ("chill", A, None),
    ("sad", A, None),
    ("happy", A, None),
    ("exciting", A, None),
    ("calm", A, None),
    ("heartbroken", A, Some("This song is about being {term}.")),
    ("motivation", N, None),
    ("fantasize", V, None),
    ("reminisce", V, None),
    ("somber", A, None),
    ("bittersweet", A, None),
    ("vulnerable", A, Some("This song is about being {term}.")),
    ("obsessed", A, Some("This song is about being {term}.")),
    ("relaxing", A, None),
    ("lit", A, None),
    ("slow", A, None),
    ("depression", N, None),
    ("smooth", A, None),
    ("influential", A, None),
    ("soft", A, None),
    ("militant", A, None),
    ("upbeat", A, None),
    ("good vibes", N, None),
    ("minimalist", A, None),
    ("sunshine", N, None),
    // filler terms
    ("angry", A, None),
    ("romantic", A, None),
    ("energetic", A, None),
    ("melancholy", A, None),
    ("peaceful", A, None),
    ("dreamy", A, None),
    ("nostalgic", A, None),
    ("hopeful", A, None),
    ("lonely", A, None),
    ("euphoric", A, None),
    ("dance", V, None),
    ("cry", V, None),
];
