#pragma once

#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "kg/corpus.hpp"

namespace kg::llm {
class Gateway;
}

namespace kg::ner {

/// The fixed 28-member category taxonomy. Enumerator order is the taxonomy
/// order used for deterministic tie-breaks; names are the serialized form.
enum class Category : int {
    Concept = 0,
    NuclearFusionExperimentalFacility,
    NuclearFusionTechnique,
    NuclearFusionDeviceType,
    NuclearFusionSystemComponent,
    NuclearFusionSystemConfiguration,
    ExperimentalApparatus,
    PhysicalProcess,
    PhysicsEntity,
    FieldConfiguration,
    Particle,
    ChemicalElementOrCompound,
    PlasmaProperty,
    PlasmaEvent,
    PlasmaRegion,
    PlasmaDynamicsAndBehavior,
    DetectionAndMonitoringSystems,
    ControlSystems,
    TheoryAndCalculation,
    SoftwareAndSimulation,
    TimeReference,
    CountryAndLocation,
    FacilityOrInstitution,
    Person,
    SafetyFeatureAndRegulatoryStandard,
    Database,
    ScientificPublicationAndCitation,
    ResearchField,
};

inline constexpr int kCategoryCount = 28;

const std::vector<std::string>& category_names();
const std::string& to_string(Category c);
std::optional<Category> category_from_name(const std::string& name);

struct EntityMention {
    std::string surface;
    Category category = Category::Concept;
    std::string abstract_id;
    int sentence_index = 0;
};

/// Zero-shot NER over one sentence. Duplicate (surface, category) pairs in
/// the reply collapse to one mention. A malformed provider reply skips the
/// sentence (logged to stderr) instead of failing the pipeline.
std::vector<EntityMention> extract_entities(const corpus::SentenceUnit& sentence,
                                            llm::Gateway& gateway);

struct ClassificationReport {
    double accuracy = 0.0;
    // (gold category, assigned category) -> count
    std::map<std::pair<std::string, std::string>, int> confusion;
};

ClassificationReport classification_report(
    const std::vector<std::pair<EntityMention, Category>>& sample);

void save_mentions(const std::vector<EntityMention>& mentions, const std::string& path);
std::vector<EntityMention> load_mentions(const std::string& path);

}  // namespace kg::ner
