//! Synthetic boilerplate corpora.
//!
//! Generates families of near-identical NDA-like documents that share every
//! paragraph byte-for-byte except a few variable slots (party name, dates,
//! amounts, ...), together with benchmark cases whose queries name each
//! document's unique party. This reproduces, in a controlled setting, the
//! cross-document confusion that plagues retrieval over standardized legal
//! text, so augmentation strategies can be compared offline.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::{BenchmarkCase, Corpus, Document, Span};
use crate::error::{Error, Result};

/// Generation parameters.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct SyntheticSpec {
    pub n_docs: usize,
    /// Paragraphs per document (slot paragraphs included).
    pub template_paragraphs: usize,
    /// How many slot kinds vary per document; the rest are frozen to fixed
    /// values so their paragraphs stay identical across documents.
    pub variable_slots: usize,
    /// Size of the party-name pool; must cover `n_docs` unique parties.
    pub slot_entropy: usize,
    pub seed: u64,
    pub question_per_doc: usize,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        SyntheticSpec {
            n_docs: 50,
            template_paragraphs: 10,
            variable_slots: 3,
            slot_entropy: 64,
            seed: 0,
            question_per_doc: 2,
        }
    }
}

/// Slot kinds in paragraph order. The party slot is always first.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum SlotKind {
    Party,
    Date,
    Amount,
    State,
    Term,
}

/// Paragraph templates. `Some(kind)` paragraphs carry that slot's filler;
/// `None` paragraphs are pure boilerplate.
fn paragraph_templates() -> Vec<(Option<SlotKind>, &'static str)> {
    vec![
        (Some(SlotKind::Party),
         "Non-Disclosure Agreement concerning {party}. This Mutual Non-Disclosure Agreement (the \"Agreement\") is entered into by and between {party}, a corporation organized and existing under the laws of the State of Delaware, and the undersigned counterparty (collectively, the \"Parties\"), who wish to protect the confidential material exchanged between them in connection with a contemplated business relationship."),
        (None,
         "For purposes of this Agreement, \"Confidential Information\" means any and all non-public information disclosed by either Party, including without limitation technical data, trade secrets, know-how, research, product plans, customer lists, financial projections, supplier arrangements, and any other business information, whether disclosed orally, in writing, or by inspection of tangible objects."),
        (Some(SlotKind::Date),
         "This Agreement shall become effective as of {date}, and the obligations of confidentiality set forth herein shall commence on that effective date and continue in full force with respect to all Confidential Information disclosed on or after it, regardless of the medium in which such information is embodied or the manner of its disclosure."),
        (None,
         "Each Party agrees to hold the other Party's Confidential Information in strict confidence, not to disclose it to any third party without prior written consent, to restrict access to those of its employees and professional advisors having a need to know, and to use such information solely for the purpose of evaluating the contemplated business relationship between the Parties."),
        (Some(SlotKind::Amount),
         "In the event of a material breach of this Agreement, the breaching Party shall be liable to the non-breaching Party for liquidated damages in the amount of {amount}, without prejudice to any further claims for damages or to injunctive or other equitable relief available at law or in equity in respect of such breach."),
        (None,
         "The obligations set forth above shall not apply to information that: (a) is or becomes publicly available through no fault of the receiving Party; (b) was rightfully known to the receiving Party prior to disclosure; (c) is lawfully obtained from a third party without restriction on disclosure; or (d) is independently developed by the receiving Party without use of or reference to the Confidential Information."),
        (Some(SlotKind::State),
         "This Agreement shall be governed by and construed in accordance with the laws of the State of {state}, without regard to its conflict of law provisions, and the Parties irrevocably submit to the exclusive jurisdiction of the state and federal courts located therein for the resolution of any dispute arising out of or relating to this Agreement."),
        (None,
         "Upon termination of discussions between the Parties, or upon the written request of the disclosing Party at any time, the receiving Party shall promptly return or destroy all copies, extracts, and summaries of the Confidential Information in its possession or control and shall certify such return or destruction in writing within ten business days."),
        (Some(SlotKind::Term),
         "The confidentiality obligations under this Agreement shall survive for a period of {term} following the termination or expiration of this Agreement, except with respect to trade secrets, which shall remain protected for so long as they continue to qualify as trade secrets under applicable law."),
        (None,
         "This Agreement constitutes the entire agreement between the Parties with respect to its subject matter, supersedes all prior or contemporaneous discussions and understandings, may be amended only by a writing signed by both Parties, may be executed in counterparts, and does not grant either Party any license or other right to the intellectual property of the other."),
        (None,
         "All notices under this Agreement shall be given in writing and delivered by hand, by registered mail, or by electronic mail with confirmation of receipt, addressed to the receiving Party at the address most recently provided by it for that purpose, and shall be deemed received on the date of actual delivery."),
        (None,
         "If any provision of this Agreement is held to be invalid or unenforceable by a court of competent jurisdiction, that provision shall be enforced to the maximum extent permissible and the remaining provisions shall continue in full force and effect, it being the intent of the Parties that the essential terms survive any such determination."),
    ]
}

/// Frozen fillers for slot kinds that are not varied.
fn fixed_filler(kind: SlotKind) -> &'static str {
    match kind {
        SlotKind::Party => unreachable!("party slot is always variable"),
        SlotKind::Date => "January 1, 2020",
        SlotKind::Amount => "$100,000",
        SlotKind::State => "New York",
        SlotKind::Term => "three (3) years",
    }
}

// Questions are deliberate paraphrases rather than quotes of the clause
// wording, the way real users ask them.
fn question_for(kind: SlotKind) -> &'static str {
    match kind {
        SlotKind::Party => "who signs the agreement and in what capacity?",
        SlotKind::Date => "from which day does the agreement take effect?",
        SlotKind::Amount => "how much money is owed if the agreement is breached?",
        SlotKind::State => "under which jurisdiction's law would a dispute be judged?",
        SlotKind::Term => "for how many years must secrets be kept after the contract ends?",
    }
}

const NAME_PREFIXES: [&str; 40] = [
    "Aurora", "Borealis", "Cascade", "Meridian", "Vertex", "Zenith", "Halcyon", "Obsidian",
    "Quantara", "Solstice", "Veridian", "Nimbus", "Arcadia", "Ironwood", "Lumen", "Pinnacle",
    "Redwood", "Sapphire", "Talisman", "Umbra", "Vanguard", "Wavecrest", "Xenith", "Yellowstone",
    "Zephyr", "Atlas", "Brightline", "Cobalt", "Driftwood", "Everpeak", "Falcon", "Granite",
    "Harborview", "Ironclad", "Juniper", "Kestrel", "Larkspur", "Moonstone", "Northgate", "Oakfield",
];

const NAME_SUFFIXES: [&str; 20] = [
    "Dynamics", "Holdings", "Industries", "Laboratories", "Logistics", "Manufacturing",
    "Networks", "Partners", "Pharmaceuticals", "Robotics", "Semiconductors", "Software",
    "Systems", "Technologies", "Telecom", "Therapeutics", "Ventures", "Works", "Analytics",
    "Biosciences",
];

const STATES: [&str; 12] = [
    "California", "Texas", "Washington", "Massachusetts", "Illinois", "Oregon", "Colorado",
    "Georgia", "Virginia", "Arizona", "Minnesota", "Nevada",
];

const MONTHS: [&str; 12] = [
    "January", "February", "March", "April", "May", "June", "July", "August", "September",
    "October", "November", "December",
];

fn number_word(n: usize) -> &'static str {
    ["one", "two", "three", "four", "five", "six", "seven", "eight", "nine", "ten"][n - 1]
}

/// Generate the corpus and its benchmark cases. Fully deterministic in
/// `spec.seed`: the same spec produces byte-identical documents and cases.
pub fn generate(spec: &SyntheticSpec) -> Result<(Corpus, Vec<BenchmarkCase>)> {
    validate(spec)?;
    let templates: Vec<(Option<SlotKind>, &str)> = {
        let all = paragraph_templates();
        let n = spec.template_paragraphs.min(all.len());
        all.into_iter().take(n).collect()
    };
    let hosted: Vec<SlotKind> = templates.iter().filter_map(|(slot, _)| *slot).collect();
    if hosted.len() < spec.variable_slots {
        return Err(Error::Synthetic(format!(
            "{} paragraphs host only {} slot(s); reduce variable_slots ({}) or raise template_paragraphs",
            templates.len(),
            hosted.len(),
            spec.variable_slots
        )));
    }
    let enabled: Vec<SlotKind> = hosted[..spec.variable_slots].to_vec();

    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut pool: Vec<String> = NAME_PREFIXES
        .iter()
        .flat_map(|p| NAME_SUFFIXES.iter().map(move |s| format!("{p} {s}")))
        .collect();
    pool.shuffle(&mut rng);
    pool.truncate(spec.slot_entropy);
    if pool.len() < spec.n_docs {
        return Err(Error::Synthetic(format!(
            "party pool exhausted: {} names for {} documents",
            pool.len(),
            spec.n_docs
        )));
    }

    let mut documents = Vec::with_capacity(spec.n_docs);
    let mut cases = Vec::new();
    for party in pool.iter().take(spec.n_docs) {
        let date = format!(
            "{} {}, {}",
            MONTHS[rng.random_range(0..MONTHS.len())],
            rng.random_range(1..=28),
            rng.random_range(2015..=2024),
        );
        let amount = format!("${},000", rng.random_range(50..=900));
        let state = STATES[rng.random_range(0..STATES.len())];
        let years = rng.random_range(1..=10usize);
        let term = format!("{} ({}) years", number_word(years), years);

        let filler = |kind: SlotKind| -> String {
            if !enabled.contains(&kind) {
                return fixed_filler(kind).to_string();
            }
            match kind {
                SlotKind::Party => party.clone(),
                SlotKind::Date => date.clone(),
                SlotKind::Amount => amount.clone(),
                SlotKind::State => state.to_string(),
                SlotKind::Term => term.clone(),
            }
        };

        let mut text = String::new();
        let mut slot_spans: Vec<(SlotKind, Span)> = Vec::new();
        for (i, (slot, template)) in templates.iter().enumerate() {
            if i > 0 {
                text.push_str("\n\n");
            }
            let start = text.chars().count();
            let paragraph = match slot {
                Some(_) => template
                    .replace("{party}", &filler(SlotKind::Party))
                    .replace("{date}", &filler(SlotKind::Date))
                    .replace("{amount}", &filler(SlotKind::Amount))
                    .replace("{state}", &filler(SlotKind::State))
                    .replace("{term}", &filler(SlotKind::Term)),
                None => template.to_string(),
            };
            text.push_str(&paragraph);
            if let Some(kind) = slot {
                slot_spans.push((*kind, Span::new(start, text.chars().count())));
            }
        }

        let slug = party.replace(' ', "-");
        let doc_id = format!("NDA-{slug}.txt");
        for q in 0..spec.question_per_doc {
            let kind = enabled[q % enabled.len()];
            let span = slot_spans
                .iter()
                .find(|(k, _)| *k == kind)
                .map(|(_, s)| *s)
                .expect("enabled slots have paragraphs");
            cases.push(BenchmarkCase {
                case_id: cases.len(),
                query: format!(
                    "Consider {party}'s Non-Disclosure Agreement; {}",
                    question_for(kind)
                ),
                ground_truth: vec![(doc_id.clone(), span)],
                dataset_tag: "synthetic-nda".into(),
            });
        }
        documents.push(Document::new(doc_id, text));
    }

    Ok((Corpus::from_documents("synthetic", documents), cases))
}

fn validate(spec: &SyntheticSpec) -> Result<()> {
    if spec.n_docs < 2 {
        return Err(Error::Synthetic("n_docs must be >= 2".into()));
    }
    if spec.slot_entropy < spec.n_docs {
        return Err(Error::Synthetic(format!(
            "slot_entropy ({}) must be >= n_docs ({}) for unique parties",
            spec.slot_entropy, spec.n_docs
        )));
    }
    if spec.slot_entropy > NAME_PREFIXES.len() * NAME_SUFFIXES.len() {
        return Err(Error::Synthetic(format!(
            "slot_entropy ({}) exceeds the {}-name pool",
            spec.slot_entropy,
            NAME_PREFIXES.len() * NAME_SUFFIXES.len()
        )));
    }
    if spec.variable_slots < 1 {
        return Err(Error::Synthetic("variable_slots must be >= 1".into()));
    }
    if spec.question_per_doc < 1 {
        return Err(Error::Synthetic("question_per_doc must be >= 1".into()));
    }
    if spec.template_paragraphs < 2 {
        return Err(Error::Synthetic("template_paragraphs must be >= 2".into()));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeSet;

    #[test]
    fn two_docs_differ_only_in_party_name() {
        let spec = SyntheticSpec {
            n_docs: 2,
            variable_slots: 1,
            slot_entropy: 4,
            ..SyntheticSpec::default()
        };
        let (corpus, cases) = generate(&spec).unwrap();
        assert_eq!(corpus.len(), 2);
        let docs: Vec<_> = corpus.documents().collect();
        // Same paragraph count and identical boilerplate paragraphs.
        let paras = |d: &Document| d.text().split("\n\n").map(String::from).collect::<Vec<_>>();
        let (a, b) = (paras(docs[0]), paras(docs[1]));
        assert_eq!(a.len(), b.len());
        let differing: Vec<usize> = (0..a.len()).filter(|&i| a[i] != b[i]).collect();
        assert_eq!(differing, vec![0], "only the party paragraph differs");
        // Each case's ground truth lies in its own document.
        for case in &cases {
            let (doc_id, span) = &case.ground_truth[0];
            let doc = corpus.get(doc_id).unwrap();
            assert!(doc.contains(*span));
            assert!(case.query.contains("Non-Disclosure Agreement"));
        }
    }

    #[test]
    fn generation_is_deterministic() {
        let spec = SyntheticSpec::default();
        let (c1, b1) = generate(&spec).unwrap();
        let (c2, b2) = generate(&spec).unwrap();
        let texts = |c: &Corpus| {
            c.documents()
                .map(|d| (d.doc_id().to_string(), d.text().to_string()))
                .collect::<Vec<_>>()
        };
        assert_eq!(texts(&c1), texts(&c2));
        assert_eq!(b1.len(), b2.len());
        for (x, y) in b1.iter().zip(&b2) {
            assert_eq!(x.query, y.query);
            assert_eq!(x.ground_truth, y.ground_truth);
        }
    }

    #[test]
    fn different_seeds_differ() {
        let (c1, _) = generate(&SyntheticSpec::default()).unwrap();
        let (c2, _) = generate(&SyntheticSpec {
            seed: 1,
            ..SyntheticSpec::default()
        })
        .unwrap();
        let ids = |c: &Corpus| c.documents().map(|d| d.doc_id().to_string()).collect::<Vec<_>>();
        assert_ne!(ids(&c1), ids(&c2));
    }

    #[test]
    fn full_scale_spec_generates_valid_cases() {
        let spec = SyntheticSpec {
            n_docs: 50,
            variable_slots: 3,
            question_per_doc: 2,
            slot_entropy: 64,
            ..SyntheticSpec::default()
        };
        let (corpus, cases) = generate(&spec).unwrap();
        assert_eq!(corpus.len(), 50);
        assert_eq!(cases.len(), 100);
        for case in &cases {
            assert!(!case.ground_truth.is_empty());
            for (doc_id, span) in &case.ground_truth {
                let doc = corpus.get(doc_id).expect("doc exists");
                assert!(doc.contains(*span), "span {span:?} fits {doc_id}");
            }
        }
    }

    #[test]
    fn party_names_are_unique_and_appear_in_one_document_only() {
        let spec = SyntheticSpec::default();
        let (corpus, cases) = generate(&spec).unwrap();
        let mut parties = BTreeSet::new();
        for case in &cases {
            let party = case
                .query
                .strip_prefix("Consider ")
                .and_then(|rest| rest.split("'s Non-Disclosure Agreement").next())
                .unwrap()
                .to_string();
            let holders: Vec<&str> = corpus
                .documents()
                .filter(|d| d.text().contains(&party))
                .map(|d| d.doc_id())
                .collect();
            assert_eq!(holders.len(), 1, "{party} must appear in exactly one document");
            assert_eq!(holders[0], case.ground_truth[0].0);
            parties.insert(party);
        }
        assert_eq!(parties.len(), spec.n_docs);
    }

    #[test]
    fn pool_exhaustion_is_fatal() {
        let spec = SyntheticSpec {
            n_docs: 10,
            slot_entropy: 5,
            ..SyntheticSpec::default()
        };
        assert!(generate(&spec).is_err());
    }

    #[test]
    fn boilerplate_paragraphs_are_byte_identical_across_docs() {
        let (corpus, _) = generate(&SyntheticSpec::default()).unwrap();
        let all: Vec<Vec<String>> = corpus
            .documents()
            .map(|d| d.text().split("\n\n").map(String::from).collect())
            .collect();
        // Paragraphs hosting disabled slots or no slots must be identical.
        // Default: 10 paragraphs, slots party/date/amount enabled (0, 2, 4).
        for paragraph in [1usize, 3, 5, 6, 7, 8, 9] {
            let first = &all[0][paragraph];
            for doc in &all {
                assert_eq!(&doc[paragraph], first, "paragraph {paragraph} diverged");
            }
        }
    }
}
