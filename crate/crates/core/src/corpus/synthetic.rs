//! Seeded template grammar producing small level-tagged practice corpora.
//!
//! Each level has its own templates. Agreement (pronoun and verb form,
//! singular and plural nouns) is carried across several words so that a
//! recurrent model gains from remembering earlier context.

use std::fs;
use std::path::Path;

use crate::corpus::Level;
use crate::error::Result;
use crate::nn::RngState;

const SUBJECTS: &[(&str, bool)] = &[
    ("I", false),
    ("You", false),
    ("We", false),
    ("They", false),
    ("He", true),
    ("She", true),
    ("My friend", true),
    ("Our teacher", true),
];
const VERBS: &[(&str, &str, &str)] = &[
    ("like", "likes", "liked"),
    ("want", "wants", "wanted"),
    ("need", "needs", "needed"),
    ("cook", "cooks", "cooked"),
    ("clean", "cleans", "cleaned"),
    ("watch", "watches", "watched"),
    ("visit", "visits", "visited"),
    ("paint", "paints", "painted"),
];
const NOUNS: &[(&str, &str)] = &[
    ("apple", "apples"),
    ("book", "books"),
    ("car", "cars"),
    ("dog", "dogs"),
    ("house", "houses"),
    ("garden", "gardens"),
    ("letter", "letters"),
    ("song", "songs"),
    ("picture", "pictures"),
    ("window", "windows"),
];
const ADJECTIVES: &[&str] = &["big", "small", "red", "old", "new", "happy", "quiet", "beautiful"];
const PLACES: &[&str] = &["park", "school", "market", "library", "station", "beach", "museum"];
const TIMES: &[&str] = &["yesterday", "last week", "this morning", "on monday", "last night"];
const DRINKS: &[&str] = &["tea", "coffee", "water", "milk", "juice"];

fn pick<'a, T>(rng: &mut RngState, items: &'a [T]) -> &'a T {
    &items[(rng.next_u64() % items.len() as u64) as usize]
}

fn elemental(rng: &mut RngState) -> String {
    let (subj, third) = *pick(rng, SUBJECTS);
    match rng.next_u64() % 4 {
        0 => {
            let (base, s, _) = *pick(rng, VERBS);
            let (noun, _) = *pick(rng, NOUNS);
            format!("{subj} {} the {noun}.", if third { s } else { base })
        }
        1 => {
            let (noun, plural) = *pick(rng, NOUNS);
            let adj = pick(rng, ADJECTIVES);
            if rng.next_u64().is_multiple_of(2) {
                format!("The {noun} is very {adj}.")
            } else {
                format!("The {plural} are very {adj}.")
            }
        }
        2 => {
            let drink = pick(rng, DRINKS);
            format!("{subj} {} a cup of {drink}.", if third { "drinks" } else { "drink" })
        }
        _ => {
            let (noun, _) = *pick(rng, NOUNS);
            format!("This is my {noun}, it's {}.", pick(rng, ADJECTIVES))
        }
    }
}

fn pre_intermediate(rng: &mut RngState) -> String {
    let (subj, third) = *pick(rng, SUBJECTS);
    match rng.next_u64() % 4 {
        0 => {
            let (_, _, past) = *pick(rng, VERBS);
            let (noun, _) = *pick(rng, NOUNS);
            let place = pick(rng, PLACES);
            let when = pick(rng, TIMES);
            format!("{when}, {subj} {past} a {noun} at the {place}.")
        }
        1 => {
            let place = pick(rng, PLACES);
            let n = ["once", "twice", "three times"][(rng.next_u64() % 3) as usize];
            format!("{subj} {} been to the {place} {n}.", if third { "has" } else { "have" })
        }
        2 => {
            let (base, _, _) = *pick(rng, VERBS);
            let (_, plural) = *pick(rng, NOUNS);
            format!("{subj} will {base} the {} {plural} tomorrow.", pick(rng, ADJECTIVES))
        }
        _ => {
            let (noun, _) = *pick(rng, NOUNS);
            let adj = pick(rng, ADJECTIVES);
            let pron = if third { "it" } else { "they" };
            let be = if third { "was" } else { "were" };
            format!("{subj} had a {adj} {noun} and {pron} {be} always {}.", pick(rng, ADJECTIVES))
        }
    }
}

fn upper_intermediate(rng: &mut RngState) -> String {
    let (subj, third) = *pick(rng, SUBJECTS);
    let (subj2, third2) = *pick(rng, SUBJECTS);
    let subj2 = subj2.to_lowercase();
    match rng.next_u64() % 3 {
        0 => {
            let (_, _, past) = *pick(rng, VERBS);
            let (noun, _) = *pick(rng, NOUNS);
            let place = pick(rng, PLACES);
            format!(
                "Although {subj} {past} the {noun}, {subj2} {} still waiting at the {place}.",
                if third2 { "was" } else { "were" }
            )
        }
        1 => {
            let (base, s, _) = *pick(rng, VERBS);
            let (_, plural) = *pick(rng, NOUNS);
            let adj = pick(rng, ADJECTIVES);
            format!(
                "If {subj} {} the {adj} {plural}, {subj2} would be happy because they are {adj}.",
                if third { s } else { base }
            )
        }
        _ => {
            let (noun, _) = *pick(rng, NOUNS);
            let (_, _, past) = *pick(rng, VERBS);
            let when = pick(rng, TIMES);
            format!(
                "The {noun} that {subj} {past} {when} has been {} ever since.",
                pick(rng, ADJECTIVES)
            )
        }
    }
}

/// `count` sentences for `level`, deterministic in `seed`.
pub fn generate_sentences(level: Level, count: usize, seed: u64) -> Vec<String> {
    let mut rng = RngState::new(seed ^ (level as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15));
    (0..count)
        .map(|_| {
            let s = match level {
                Level::Elemental => elemental(&mut rng),
                Level::PreIntermediate => pre_intermediate(&mut rng),
                Level::UpperIntermediate => upper_intermediate(&mut rng),
            };
            let mut chars = s.chars();
            match chars.next() {
                Some(c) => c.to_uppercase().chain(chars).collect(),
                None => s,
            }
        })
        .collect()
}

/// Writes `<root>/<level>/synthetic.txt` for every level.
pub fn write_corpus(root: &Path, sentences_per_level: usize, seed: u64) -> Result<()> {
    for level in Level::ALL {
        let dir = root.join(level.as_str());
        fs::create_dir_all(&dir)?;
        let mut text = generate_sentences(level, sentences_per_level, seed).join("\n");
        text.push('\n');
        fs::write(dir.join("synthetic.txt"), text)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{clean_and_tokenize, load_corpus};

    #[test]
    fn deterministic() {
        assert_eq!(
            generate_sentences(Level::Elemental, 20, 3),
            generate_sentences(Level::Elemental, 20, 3)
        );
        assert_ne!(
            generate_sentences(Level::Elemental, 20, 3),
            generate_sentences(Level::Elemental, 20, 4)
        );
    }

    #[test]
    fn levels_get_longer() {
        let mean = |l| {
            let s = generate_sentences(l, 200, 1);
            s.iter().map(|x| clean_and_tokenize(x).len()).sum::<usize>() as f64 / 200.0
        };
        assert!(mean(Level::Elemental) < mean(Level::PreIntermediate));
        assert!(mean(Level::PreIntermediate) < mean(Level::UpperIntermediate));
    }

    #[test]
    fn written_corpus_loads() {
        let dir = tempfile::tempdir().unwrap();
        write_corpus(dir.path(), 15, 7).unwrap();
        let s = load_corpus(dir.path()).unwrap();
        assert_eq!(s.len(), 45);
    }
}
