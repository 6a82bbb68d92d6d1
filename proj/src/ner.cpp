#include "kg/ner.hpp"

#include <json.hpp>

#include <fstream>
#include <iostream>

#include "kg/common.hpp"
#include "kg/llm.hpp"
#include "kg/text.hpp"

namespace kg::ner {

namespace {
using nlohmann::json;
}

const std::vector<std::string>& category_names() {
    static const std::vector<std::string> names = {
        "Concept",
        "Nuclear Fusion Experimental Facility",
        "Nuclear Fusion Technique",
        "Nuclear Fusion Device Type",
        "Nuclear Fusion System Component",
        "Nuclear Fusion System Configuration",
        "Experimental Apparatus",
        "Physical Process",
        "Physics Entity",
        "Field Configuration",
        "Particle",
        "Chemical Element or Compound",
        "Plasma Property",
        "Plasma Event",
        "Plasma Region",
        "Plasma Dynamics and Behavior",
        "Detection and Monitoring Systems",
        "Control Systems",
        "Theory and Calculation",
        "Software and Simulation",
        "Time Reference",
        "Country and Location",
        "Facility or Institution",
        "Person",
        "Safety Feature and Regulatory Standard",
        "Database",
        "Scientific Publication and Citation",
        "Research Field",
    };
    return names;
}

const std::string& to_string(Category c) {
    return category_names().at(static_cast<std::size_t>(c));
}

std::optional<Category> category_from_name(const std::string& name) {
    const auto& names = category_names();
    for (std::size_t i = 0; i < names.size(); ++i) {
        if (names[i] == name) return static_cast<Category>(i);
    }
    return std::nullopt;
}

std::vector<EntityMention> extract_entities(const corpus::SentenceUnit& sentence,
                                            llm::Gateway& gateway) {
    if (sentence.text.empty()) throw ValidationError("cannot run NER on an empty sentence");

    llm::PromptContext ctx;
    ctx.sentence = sentence.text;
    ctx.categories = category_names();

    llm::StructuredReply reply;
    try {
        reply = gateway.ask(llm::PromptKind::Ner, ctx, category_names());
    } catch (const ParseError& e) {
        std::cerr << "ner: skipping sentence " << sentence.abstract_id << "#"
                  << sentence.index << ": " << e.what() << "\n";
        return {};
    }

    std::vector<EntityMention> mentions;
    for (const auto& [surface, category_name] : reply.entities) {
        auto category = category_from_name(category_name);
        if (!category) category = Category::Concept;  // parse_reply already mapped unknowns
        bool dup = false;
        for (const auto& m : mentions) {
            if (m.surface == surface && m.category == *category) {
                dup = true;
                break;
            }
        }
        if (dup) continue;
        mentions.push_back({surface, *category, sentence.abstract_id, sentence.index});
    }
    return mentions;
}

ClassificationReport classification_report(
    const std::vector<std::pair<EntityMention, Category>>& sample) {
    if (sample.empty()) throw ValidationError("classification report needs a non-empty sample");
    ClassificationReport report;
    int correct = 0;
    for (const auto& [mention, gold] : sample) {
        if (mention.category == gold) ++correct;
        report.confusion[{to_string(gold), to_string(mention.category)}] += 1;
    }
    report.accuracy = static_cast<double>(correct) / static_cast<double>(sample.size());
    return report;
}

void save_mentions(const std::vector<EntityMention>& mentions, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write mentions file: " + path);
    for (const auto& m : mentions) {
        json j{{"surface", m.surface},
               {"category", to_string(m.category)},
               {"abstract_id", m.abstract_id},
               {"sentence_index", m.sentence_index}};
        out << j.dump() << "\n";
    }
}

std::vector<EntityMention> load_mentions(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open mentions file: " + path);
    std::vector<EntityMention> mentions;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (text::trim(line).empty()) continue;
        json j = json::parse(line, nullptr, false);
        if (j.is_discarded() || !j.is_object()) {
            throw IoError("malformed mentions line " + std::to_string(lineno) + " in " + path);
        }
        EntityMention m;
        m.surface = j.at("surface").get<std::string>();
        auto category = category_from_name(j.at("category").get<std::string>());
        m.category = category.value_or(Category::Concept);
        m.abstract_id = j.at("abstract_id").get<std::string>();
        m.sentence_index = j.at("sentence_index").get<int>();
        mentions.push_back(std::move(m));
    }
    return mentions;
}

}  // namespace kg::ner
