//! Interactive questionnaire prompting. Collects one answer per question
//! and hands back the full map; the caller writes the replayable answers
//! document. An aborted session returns `None` and nothing is written.

use std::collections::BTreeMap;
use std::io::{BufRead, Write};

use anyhow::Result;

use fairaudit_core::checklist::{Answer, QuestionnaireDef};

pub fn prompt_answers<R: BufRead, W: Write>(
    def: &QuestionnaireDef,
    input: &mut R,
    output: &mut W,
) -> Result<Option<BTreeMap<String, Answer>>> {
    let total = def.questions.len();
    let mut answers = BTreeMap::new();
    writeln!(
        output,
        "answer each question with yes, no, or na (not applicable); quit aborts"
    )?;
    for (i, question) in def.questions.iter().enumerate() {
        loop {
            write!(
                output,
                "[{}] {}/{} {} ",
                question.principle.as_str(),
                i + 1,
                total,
                question.text
            )?;
            output.flush()?;
            let mut line = String::new();
            if input.read_line(&mut line)? == 0 {
                // EOF mid-session aborts.
                return Ok(None);
            }
            match parse_answer(&line) {
                Some(ParsedAnswer::Answer(a)) => {
                    answers.insert(question.id.clone(), a);
                    break;
                }
                Some(ParsedAnswer::Quit) => return Ok(None),
                None => {
                    writeln!(output, "unrecognized answer `{}`", line.trim())?;
                }
            }
        }
    }
    Ok(Some(answers))
}

enum ParsedAnswer {
    Answer(Answer),
    Quit,
}

fn parse_answer(line: &str) -> Option<ParsedAnswer> {
    match line.trim().to_ascii_lowercase().as_str() {
        "y" | "yes" => Some(ParsedAnswer::Answer(Answer::Yes)),
        "n" | "no" => Some(ParsedAnswer::Answer(Answer::No)),
        "na" | "n/a" | "not_applicable" | "not applicable" => {
            Some(ParsedAnswer::Answer(Answer::NotApplicable))
        }
        "q" | "quit" => Some(ParsedAnswer::Quit),
        _ => None,
    }
}
