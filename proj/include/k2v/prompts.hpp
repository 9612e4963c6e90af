#pragma once

#include <string>
#include <string_view>

#include "k2v/text.hpp"

// Bundled prompt templates. Placeholders are written as {name} and filled by
// fill_template(); nothing else in the templates is interpreted.
namespace k2v::prompts {

/// Textualization: rephrase a masked quintuple. Placeholders: {entities}, {relationships}.
inline constexpr std::string_view kTextualize = R"(---Role---
You are an NLP expert responsible for generating a logically structured and coherent rephrased version of the TEXT based on ENTITIES and RELATIONSHIPS provided below.
Use English as output language.

---Goal---
To generate a version of the text that is rephrased and conveys the same meaning as the original entity and relationship descriptions, while:
1. Following a clear logical flow and structure
2. Establishing proper cause-and-effect relationships
3. Ensuring temporal and sequential consistency
4. Creating smooth transitions between ideas using conjunctions and appropriate linking words like 'firstly,' 'however,' 'therefore,' etc.

---Instructions---
1. Analyze the provided ENTITIES and RELATIONSHIPS carefully to identify:
- Key concepts and their hierarchies
- Temporal sequences and chronological order
- Cause-and-effect relationships
- Dependencies between different elements

2. Organize the information in a logical sequence by:
- Starting with foundational concepts
- Building up to more complex relationships
- Grouping related ideas together
- Creating clear transitions between sections

3. Rephrase the text while maintaining:
- Logical flow and progression
- Clear connections between ideas
- Proper context and background
- Coherent narrative structure

4. Review and refine the text to ensure:
- Logical consistency throughout
- Clear cause-and-effect relationships

################
-ENTITIES-
################
{entities}

################
-RELATIONSHIPS-
################
{relationships}
)";

/// Entity and relation extraction. Placeholder: {input_text}.
inline constexpr std::string_view kExtraction = R"(You are an NLP expert, skilled at analyzing text to extract named entities and their relationships.

---Goal---
Given a text document that is potentially relevant to this activity and a list of entity types, identify all entities of those types from the text and all relationships among the identified entities.
Use English as output language.

---Steps---
1. Identify all entities. For each identified entity, extract the following information:
- entity_name: Name of the entity, use same language as input text. If English, capitalized the name.
- entity_type: One of the following types: {concept, date, location, keyword, organization, person, event, work, nature, artificial, science, technology, mission, gene}
- entity_summary: Comprehensive summary of the entity's attributes and activities
- Format each entity as: ("entity"<|><entity_name><|><entity_type><|><entity_summary>)

2. From the entities identified in step 1, identify all pairs of (source_entity, target_entity) that are *clearly related* to each other.
For each pair of related entities, extract the following information:
- source_entity: name of the source entity, as identified in step 1
- target_entity: name of the target entity, as identified in step 1
- relationship_summary: explanation as to why you think the source entity and the target entity are related to each other
- Format each relationship as: ("relationship"<|><source_entity><|><target_entity><|><relationship_summary>)

3. Identify high-level key words that summarize the main concepts, themes, or topics of the entire text. These should capture the overarching ideas present in the document. Format the content-level key words as ("content_keywords"<|><high_level_keywords>)

4. Return output in English as a single list of all the entities and relationships identified. Use **##** as the list delimiter.

5. When finished, output <|COMPLETE|>

################
-Input Text-
################
{input_text}
)";

/// Per-criterion judge. Placeholders: {question}, {answer}, {criterion}, {reasoning}.
inline constexpr std::string_view kJudge = R"(You are an impartial and meticulous AI examiner.
Your task is to evaluate a student's [Reasoning Process] for a given [Question-Answer Pair] against a specific, detailed [Criterion].
The [Question-Answer Pair] is a fill-in-the-blank question, with "{ }" indicating the content to be filled in. A fill-in-the-blank question may contain multiple "{ }", and the content to be filled in for each "{ }" is the same.
Your judgment must be strict, objective, and based solely on the provided information.

NOTE: Your output can only be "yes" or "NO"

[Question-Answer Pair]
question: {question}
answer: {answer}

[Criterion]
criterion: {criterion}

[Reasoning Process]
reasoning process: {reasoning}
)";

/// Checklist instantiation. Placeholders: {field}, {question}, {answer}, {general_criteria}.
inline constexpr std::string_view kChecklist = R"(You are a senior expert in {field}, specializing in creating and grading exam questions. Your task is to create a set of detailed scoring checklist for a [Specific Question] based on the provided [General Criteria].

[Specific Question]:
A complete question in the field of {field}, including the question and the corresponding answer.
question: {question}
answer: {answer}

[General Criteria]:
{general_criteria}
Based on the [General Criteria] above, design a set of detailed and objectively scorable checklist for the provided [Specific Exam Question]. The checklist will be used to evaluate the student's problem-solving approach (reasoning process).
The checklist should consist of multiple independent criteria. Each criteria must be a clear, specific statement describing what an ideal step or thought process should achieve, making it objectively assessable. Please ensure The checklist are closely related to the core knowledge and skill requirements of the [Specific Exam Question].
Only output the checklist, with no other content. Please structure the output in JSON format. For example:
["criteria 1", "criteria 2"]
)";

struct QualityDimension {
    std::string_view name;
    std::string_view definition;
};

inline constexpr QualityDimension kQualityDimensions[] = {
    {"Relevance",
     "Are the items in the checklist directly relevant to the specific question and the ground truth ? "
     "Do they check for information that actually matters for this problem ?"},
    {"Verifiability",
     "Are the criteria objective and verifiable? Can a third-party evaluator easily determine \"yes\" or "
     "\"no\" without ambiguity?"},
    {"Necessity",
     "Does the checklist cover the necessary steps or facts required to reach the correct conclusion? Are "
     "there missing critical steps or redundant unnecessary steps?"},
};

/// Checklist quality rubric, one dimension per call.
/// Placeholders: {dimension}, {definition}, {question}, {answer}, {checklist}.
inline constexpr std::string_view kChecklistQuality = R"(You are an expert reviewer of grading checklists.
Evaluate the checklist below on a scale of 1 to 5 for the dimension "{dimension}".
{dimension}: {definition}

[Question-Answer Pair]
question: {question}
answer: {answer}

[Checklist]
{checklist}

Output only the numeric score.
)";

/// Extraction quality judge for one chunk.
/// Placeholders: {chunk_text}, {entities}, {relations}.
inline constexpr std::string_view kExtractionAudit = R"(You are an expert annotator auditing entity and relation extraction.
Compare the extracted entities and relations against the source text and score each in [0, 1]:
- accuracy: the proportion of correct items among all extracted items.
- completeness: the proportion of ground-truth items in the text that were successfully extracted.
- precision: the exactness of names and descriptions.

[Source Text]
{chunk_text}

[Extracted Entities]
{entities}

[Extracted Relations]
{relations}

Respond with JSON only:
{"ner": {"accuracy": x, "completeness": x, "precision": x}, "re": {"accuracy": x, "completeness": x, "precision": x}}
)";

/// Replace each `{key}` with its value. Values are inserted verbatim and never re-scanned.
template <typename... Pairs>
std::string fill_template(std::string_view tmpl, const Pairs&... pairs) {
    std::string out;
    out.reserve(tmpl.size() + 256);
    const std::pair<std::string_view, std::string_view> table[] = {
        {std::string_view(pairs.first), std::string_view(pairs.second)}...};
    std::size_t i = 0;
    while (i < tmpl.size()) {
        bool replaced = false;
        if (tmpl[i] == '{') {
            for (const auto& [key, value] : table) {
                if (tmpl.size() - i >= key.size() + 2 && tmpl.compare(i + 1, key.size(), key) == 0 &&
                    tmpl[i + 1 + key.size()] == '}') {
                    out.append(value);
                    i += key.size() + 2;
                    replaced = true;
                    break;
                }
            }
        }
        if (!replaced) out.push_back(tmpl[i++]);
    }
    return out;
}

} // namespace k2v::prompts
