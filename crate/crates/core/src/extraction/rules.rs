//! Deterministic, part-of-speech-free triple heuristic.
//!
//! The text is cut into clauses at coordinating conjunctions, semicolons and
//! relative pronouns. Each clause yields at most one triple: the tokens before
//! the first verb form the subject, the verb group is the predicate, and the
//! rest is the object. Verbs are recognised from closed word lists plus a few
//! suffix rules (`-ed`, and `-s` as a last resort).

use super::Triple;

const COORDINATORS: &[&str] = &["and", "but", "or", "nor", "yet", "while", "whereas"];
const RELATIVES: &[&str] = &["who", "which", "whom"];

const MODALS: &[&str] = &[
    "must", "can", "could", "will", "would", "shall", "should", "may", "might", "cannot", "won't", "can't",
    "wouldn't", "couldn't", "shouldn't", "to",
];
const DO_FORMS: &[&str] = &["do", "does", "did", "don't", "doesn't", "didn't"];
const HAVE_FORMS: &[&str] = &["have", "has", "had", "haven't", "hasn't", "hadn't", "having"];
const BE_FORMS: &[&str] = &[
    "is", "are", "was", "were", "be", "been", "being", "am", "isn't", "aren't", "wasn't", "weren't",
];
const ADVERBS: &[&str] = &[
    "not", "never", "also", "just", "already", "still", "always", "often", "really", "even", "n't",
];

// Past forms and participles that are rarely anything but verbs.
const IRREGULAR: &[&str] = &[
    "wrote", "written", "said", "says", "made", "took", "taken", "gave", "given", "went", "gone", "got",
    "gotten", "grew", "grown", "rose", "risen", "fell", "fallen", "won", "paid", "spent", "led", "ran", "saw",
    "seen", "told", "knew", "known", "thought", "came", "became", "began", "begun", "brought", "bought",
    "built", "sold", "sent", "kept", "held", "meant", "met", "found", "stood", "spoke", "spoken", "chose",
    "chosen", "drove", "driven", "ate", "fought", "taught", "caught", "felt", "heard", "lost", "left",
    "shown", "showed", "done", "threw", "thrown", "broke", "broken", "struck", "swore", "wore", "forgot",
    "forgotten", "hid", "hidden", "sought", "understood", "withdrew", "overtook",
];

// Base/present forms; accepted only straight after a personal pronoun.
const BASE_VERBS: &[&str] = &[
    "remind", "want", "need", "think", "know", "believe", "say", "tell", "support", "oppose", "increase",
    "raise", "cut", "create", "vote", "pass", "spend", "pay", "control", "win", "lose", "make", "take", "give",
    "go", "get", "see", "come", "become", "bring", "buy", "build", "sell", "send", "keep", "hold", "mean",
    "meet", "find", "stand", "speak", "choose", "fight", "hear", "feel", "show", "promise", "propose",
    "claim", "agree", "disagree", "like", "love", "hate", "hope", "expect", "plan", "intend", "try", "work",
    "live", "lead", "run", "write", "read", "put", "set", "let", "help", "call", "ask", "use", "have", "do",
];

const PERSONAL_PRONOUNS: &[&str] = &["i", "you", "we", "they", "he", "she", "it"];

const DETERMINERS: &[&str] = &[
    "the", "a", "an", "this", "that", "these", "those", "my", "your", "his", "her", "its", "our", "their",
    "some", "any", "no", "every", "each", "all", "many", "much", "more", "most", "several", "few",
];

const PREPOSITIONS: &[&str] = &[
    "of", "in", "on", "at", "for", "with", "by", "from", "about", "into", "over", "under", "after", "before",
    "between", "through", "during", "without", "against", "among", "per", "since", "until", "as",
];

const ED_STOPLIST: &[&str] = &[
    "hundred", "indeed", "speed", "seed", "feed", "breed", "creed", "greed", "sacred", "naked", "wicked",
    "rugged", "wretched", "beloved", "kindred", "shed", "bred", "need",
];

const S_STOPLIST: &[&str] = &["this", "his", "its", "yes", "thus", "always", "perhaps", "sometimes", "news"];

#[derive(Clone, Copy, PartialEq, Eq)]
enum SegmentKind {
    Main,
    Coordinate,
    Relative,
}

struct Segment<'a> {
    kind: SegmentKind,
    conjunction: Option<&'a str>,
    tokens: Vec<&'a str>,
}

fn normalized(token: &str) -> String {
    token
        .trim_matches(|c: char| !c.is_alphanumeric() && c != '\'' && c != '-')
        .to_lowercase()
}

fn in_list(list: &[&str], word: &str) -> bool {
    list.contains(&word)
}

fn is_function_word(word: &str) -> bool {
    in_list(DETERMINERS, word) || in_list(PREPOSITIONS, word) || in_list(PERSONAL_PRONOUNS, word)
        || word.chars().next().is_some_and(|c| c.is_ascii_digit())
}

fn is_aux(word: &str) -> bool {
    in_list(MODALS, word) || in_list(DO_FORMS, word) || in_list(HAVE_FORMS, word) || in_list(BE_FORMS, word)
}

fn ends_clause(token: &str) -> bool {
    token.ends_with(';') || token.ends_with(':')
}

fn looks_like_ed(word: &str) -> bool {
    word.len() >= 5 && word.ends_with("ed") && word.chars().all(|c| c.is_alphabetic()) && !in_list(ED_STOPLIST, word)
}

fn looks_like_s(word: &str) -> bool {
    word.len() >= 4
        && word.ends_with('s')
        && !word.ends_with("ss")
        && !word.ends_with("us")
        && !word.ends_with("is")
        && word.chars().all(|c| c.is_alphabetic())
        && !in_list(S_STOPLIST, word)
}

/// Index of the first verb in a clause, if any.
fn find_verb(tokens: &[&str]) -> Option<usize> {
    let words: Vec<String> = tokens.iter().map(|t| normalized(t)).collect();
    let after_determiner = |i: usize| i > 0 && in_list(DETERMINERS, &words[i - 1]);
    let lowercase = |i: usize| tokens[i].chars().next().is_some_and(|c| !c.is_uppercase()) || i == 0;

    let strong = (0..words.len()).find(|&i| {
        let w = words[i].as_str();
        if w.is_empty() {
            return false;
        }
        if is_aux(w) && w != "to" {
            return true;
        }
        if after_determiner(i) || !lowercase(i) {
            return false;
        }
        if in_list(IRREGULAR, w) || looks_like_ed(w) {
            return true;
        }
        i > 0 && in_list(PERSONAL_PRONOUNS, &words[i - 1]) && in_list(BASE_VERBS, w)
    });
    if strong.is_some() {
        return strong;
    }

    (1..words.len()).find(|&i| {
        let prev = words[i - 1].as_str();
        lowercase(i)
            && looks_like_s(&words[i])
            && !in_list(DETERMINERS, prev)
            && !in_list(PREPOSITIONS, prev)
            && !prev.is_empty()
    })
}

/// Extends the verb group starting at `start`; returns one past its end.
fn verb_group_end(tokens: &[&str], start: usize) -> usize {
    let mut end = start + 1;
    let mut last_head = normalized(tokens[start]);
    while end < tokens.len() {
        let w = normalized(tokens[end]);
        if w.is_empty() || ends_clause(tokens[end - 1]) || tokens[end - 1].ends_with(',') {
            break;
        }
        if in_list(ADVERBS, &w) || (w.ends_with("ly") && w.len() > 4) {
            end += 1;
            continue;
        }
        let accept = if in_list(MODALS, &last_head) || in_list(DO_FORMS, &last_head) {
            !is_function_word(&w)
        } else if in_list(HAVE_FORMS, &last_head) {
            w == "been" || looks_like_ed(&w) || in_list(IRREGULAR, &w) || w.ends_with("en")
        } else if in_list(BE_FORMS, &last_head) {
            w == "being" || looks_like_ed(&w) || in_list(IRREGULAR, &w) || (w.ends_with("ing") && w.len() > 4)
        } else {
            false
        };
        if !accept {
            break;
        }
        last_head = w;
        end += 1;
    }
    end
}

fn span(tokens: &[&str]) -> String {
    tokens
        .join(" ")
        .trim_matches(|c: char| matches!(c, '.' | ',' | ';' | ':' | '!' | '?' | '"') || c.is_whitespace())
        .to_owned()
}

fn segments(text: &str) -> Vec<Segment<'_>> {
    let mut out = vec![Segment {
        kind: SegmentKind::Main,
        conjunction: None,
        tokens: Vec::new(),
    }];
    for token in text.split_whitespace() {
        let word = normalized(token);
        let current = out.last_mut().expect("nonempty");
        if !current.tokens.is_empty() && in_list(COORDINATORS, &word) {
            out.push(Segment {
                kind: SegmentKind::Coordinate,
                conjunction: Some(token),
                tokens: Vec::new(),
            });
            continue;
        }
        if !current.tokens.is_empty() && in_list(RELATIVES, &word) {
            out.push(Segment {
                kind: SegmentKind::Relative,
                conjunction: None,
                tokens: Vec::new(),
            });
            continue;
        }
        current.tokens.push(token);
        if ends_clause(token) {
            out.push(Segment {
                kind: SegmentKind::Coordinate,
                conjunction: None,
                tokens: Vec::new(),
            });
        }
    }
    out.retain(|s| !s.tokens.is_empty());

    // A verbless coordinate ("salt and pepper") belongs to the clause before it.
    let mut merged: Vec<Segment<'_>> = Vec::with_capacity(out.len());
    for seg in out {
        match merged.last_mut() {
            Some(prev) if seg.kind == SegmentKind::Coordinate && find_verb(&seg.tokens).is_none() => {
                prev.tokens.extend(seg.conjunction);
                prev.tokens.extend(seg.tokens);
            }
            _ => merged.push(seg),
        }
    }
    merged
}

/// Trailing noun phrase of a clause, used as the subject of a following
/// relative clause.
fn antecedent(tokens: &[&str]) -> String {
    let start = tokens.len().saturating_sub(4);
    let det = (start..tokens.len()).rev().find(|&i| in_list(DETERMINERS, &normalized(tokens[i])));
    match det {
        Some(i) => span(&tokens[i..]),
        None => span(&tokens[tokens.len().saturating_sub(1)..]),
    }
}

/// Extracts triples from `text` in emission order. `source_id` is left empty.
pub fn rule_based_extract(text: &str) -> Vec<Triple> {
    let mut triples = Vec::new();
    let mut previous_subject: Option<String> = None;
    let segs = segments(text);

    for (idx, seg) in segs.iter().enumerate() {
        let Some(verb) = find_verb(&seg.tokens) else {
            continue;
        };
        let end = verb_group_end(&seg.tokens, verb);
        let mut subject = span(&seg.tokens[..verb]);
        if subject.is_empty() {
            subject = match seg.kind {
                SegmentKind::Coordinate => previous_subject.clone().unwrap_or_default(),
                SegmentKind::Relative if idx > 0 => antecedent(&segs[idx - 1].tokens),
                _ => String::new(),
            };
        }
        let predicate = span(&seg.tokens[verb..end]);
        if subject.is_empty() || predicate.is_empty() {
            continue;
        }
        let object = span(&seg.tokens[end..]);
        previous_subject = Some(subject.clone());
        triples.push(Triple {
            subject,
            predicate,
            object,
            source_id: String::new(),
            rank: triples.len(),
        });
    }
    triples
}
