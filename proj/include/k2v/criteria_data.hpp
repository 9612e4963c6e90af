#pragma once

#include <string_view>
#include <vector>

// Bundled general-criteria registries for the agriculture, medicine and law domains.
namespace k2v::criteria_data {

struct Group {
    std::string_view name;
    std::vector<std::string_view> criteria;
};

struct Registry {
    std::string_view domain;
    std::string_view field;  // expert field named in the checklist prompt
    std::vector<Group> groups;
};

inline const Registry kAgriculture{
    "agriculture",
    "agriculture and biology",
    {
        {"Concepts and Knowledge",
         {"Accurately defines the core biological concepts involved in the question.",
          "Clearly describes the involved biological processes in the correct logical sequence.",
          "Accurately explains the meaning and relationships represented by abstract biological models in words.",
          "Applies abstract biological concepts to the given specific scenario.",
          "Correctly explains the connection between a biological concept or process and other related principles."}},
        {"Scientific Method and Design",
         {"Clearly states a relevant null hypothesis or alternative hypothesis.",
          "Accurately identifies the independent, dependent, and key control variables of an experiment.",
          "Makes a logical and reasonable prediction of the experimental outcome based on a scientific hypothesis.",
          "Evaluates the validity or potential flaws of a given experimental design."}},
        {"Data Processing and Analysis",
         {"Accurately and correctly extracts key data points.",
          "Clearly and comprehensively describes the overall trend or significant patterns in the given data.",
          "Accurately describes the relationship between variables (e.g., positive correlation, negative "
          "correlation, no correlation).",
          "Correctly performs necessary mathematical calculations (e.g., rate, rate of change, percentage) to "
          "support the analysis."}},
        {"Statistics and Evaluation",
         {"In appropriate contexts, correctly uses statistical concepts to explain the reliability of data.",
          "Based on data analysis, draws a conclusion of \"support,\" \"refute,\" or \"inconclusive\" for a given "
          "scientific hypothesis.",
          "Explains outliers or anomalous data points and analyzes their potential causes or impact on the "
          "conclusion."}},
        {"Argumentation and Reasoning",
         {"Makes a scientific claim that is specific and supported by concrete evidence.",
          "Clearly articulates how the evidence supports the scientific claim, demonstrating a strong logical chain.",
          "Predicts the likely consequences of a change (e.g., disturbance, mutation) to a system based on "
          "biological principles.",
          "Explains the underlying biological reason for an observed phenomenon or experimental result.",
          "Avoids over-extrapolation or unfounded speculation beyond the scope of the given evidence.",
          "The overall response is well-structured, logically coherent, and clearly written, avoiding "
          "self-contradictions and redundant statements."}},
    }};

inline const Registry kMedicine{
    "medicine",
    "medicine",
    {
        {"Concepts and Knowledge",
         {"Accurately defines the core medical concepts involved in the question.",
          "Clearly describes the involved medical processes in the correct logical sequence.",
          "Accurately explains the meaning and relationships represented by abstract biological or medical models "
          "in words.",
          "Applies abstract biological or medical concepts to the given specific scenario.",
          "Correctly explains the connection between a medical concept or process and other related principles."}},
        {"Scientific Method and Design",
         {"Clearly states a relevant null hypothesis or alternative hypothesis.",
          "Accurately identifies the independent, dependent, and key control variables of an experiment.",
          "Makes a logical and reasonable prediction of the experimental outcome based on a scientific hypothesis.",
          "Evaluates the validity or potential flaws of a given experimental design."}},
        {"Data Processing and Analysis",
         {"Accurately and correctly extracts key data points.",
          "Clearly and comprehensively describes the overall trend or significant patterns in the given data.",
          "Accurately describes the relationship between variables (e.g., positive correlation, negative "
          "correlation, no correlation).",
          "Correctly performs necessary mathematical calculations (e.g., rate, rate of change, percentage) to "
          "support the analysis."}},
        {"Statistics and Evaluation",
         {"In appropriate contexts, correctly uses statistical concepts to explain the reliability of data.",
          "Based on data analysis, draws a conclusion of \"support,\" \"refute,\" or \"inconclusive\" for a given "
          "scientific hypothesis.",
          "Explains outliers or anomalous data points and analyzes their potential causes or impact on the "
          "conclusion."}},
        {"Argumentation and Reasoning",
         {"Makes a scientific claim that is specific and supported by concrete evidence.",
          "Clearly articulates how the evidence supports the scientific claim, demonstrating a strong logical chain.",
          "Predicts the likely consequences of a change (e.g., disturbance, mutation) to a system based on "
          "biological or medical principles.",
          "Explains the underlying biological or medical reason for an observed phenomenon or experimental result.",
          "Avoids over-extrapolation or unfounded speculation beyond the scope of the given evidence.",
          "Based on diagnostic or analytical results, proposes specific and feasible treatment or management "
          "recommendations that comply with clinical guidelines and ethical principles.",
          "Clearly articulates the rationale for the proposed recommendations and weighs their potential benefits "
          "and risks.",
          "Be able to ignore irrelevant information and focus on answering the question directly.",
          "The overall response is well-structured, logically coherent, and clearly written, avoiding "
          "self-contradictions and redundant statements."}},
    }};

inline const Registry kLaw{
    "law",
    "law",
    {
        {"Fact and Issue Identification",
         {"Accurately identifies and extracts key legally relevant facts from the case material.",
          "Clearly and accurately identifies the core legal issues or points of contention presented in the case.",
          "Is able to distinguish between legally relevant and irrelevant facts."}},
        {"Rule Statement and Interpretation",
         {"Accurately states the legal rules (including statutes, judicial interpretations, fundamental "
          "principles, etc.) relevant to the identified issues.",
          "Correctly explains the meaning and constituent elements of the legal rules.",
          "Where appropriate, is able to articulate the legislative intent, value orientation, or legal theory "
          "behind the relevant rules."}},
        {"Application and Analysis",
         {"Effectively connects the identified key facts to the relevant legal rules (i.e., the process of "
          "\"subsumption\").",
          "Logically analyzes whether the facts of the case satisfy (or fail to satisfy) the constituent elements "
          "of the legal rules.",
          "Is able to analyze and argue from the perspectives of all involved parties (e.g., plaintiff/defendant, "
          "prosecution/defense).",
          "Is able to anticipate and respond to potential and compelling counterarguments or defenses.",
          "When dealing with complex problems, is able to conduct a layered, step-by-step analysis of different "
          "claims or legal relationships."}},
        {"Conclusion and Consequences",
         {"Based on the preceding analysis, draws a clear, reasonable, and persuasive conclusion for each issue.",
          "Is able to articulate the specific legal consequences corresponding to the conclusion (e.g., type and "
          "scope of civil liability, determination of criminal responsibility).",
          "Proposes solutions or legal advice that are specific, feasible, and in compliance with legal "
          "regulations and professional ethics."}},
        {"Overall Structure and Expression",
         {"The overall response is clearly structured and logically coherent (e.g., follows a framework like "
          "IRAC: Issue, Rule, Application, Conclusion).",
          "Uses legal terminology accurately and appropriately.",
          "The reasoning process is rigorous, avoiding over-extrapolation or speculation not supported by the "
          "given facts or law.",
          "Is able to ignore irrelevant information and focus on answering the question directly.",
          "The overall response is well-written, clear, and avoids self-contradictions or unnecessary redundancy.",
          "The overall response is clearly written, avoiding self-contradictions and redundant statements."}},
    }};

inline const Registry* const kBundled[] = {&kAgriculture, &kMedicine, &kLaw};

} // namespace k2v::criteria_data
