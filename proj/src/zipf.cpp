#include "kg/zipf.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "kg/common.hpp"

namespace kg::zipf {

RankFrequencyTable rank_frequencies(const std::vector<std::pair<std::string, long long>>& counts,
                                    int top_n, bool single_word_only) {
    std::vector<std::pair<std::string, long long>> kept;
    for (const auto& [surface, frequency] : counts) {
        if (frequency <= 0) continue;
        if (single_word_only && surface.find(' ') != std::string::npos) continue;
        kept.emplace_back(surface, frequency);
    }
    std::sort(kept.begin(), kept.end(), [](const auto& a, const auto& b) {
        if (a.second != b.second) return a.second > b.second;
        return a.first < b.first;
    });
    if (top_n >= 0 && kept.size() > static_cast<std::size_t>(top_n)) kept.resize(top_n);

    RankFrequencyTable table;
    table.rows.reserve(kept.size());
    for (std::size_t i = 0; i < kept.size(); ++i) {
        table.rows.push_back({static_cast<int>(i) + 1, kept[i].first, kept[i].second});
    }
    return table;
}

ZipfFit fit_zipf(const RankFrequencyTable& table) {
    if (table.rows.size() < 2) throw ValidationError("zipf fit needs at least 2 rows");

    double log_sum = 0.0;
    for (const auto& row : table.rows) {
        if (row.frequency <= 0) throw ValidationError("zipf fit requires positive frequencies");
        log_sum += std::log(static_cast<double>(row.frequency)) +
                   std::log(static_cast<double>(row.rank));
    }
    ZipfFit fit;
    fit.c = std::exp(log_sum / static_cast<double>(table.rows.size()));

    double chi2 = 0.0;
    for (const auto& row : table.rows) {
        double expected = fit.c / static_cast<double>(row.rank);
        double diff = static_cast<double>(row.frequency) - expected;
        chi2 += diff * diff / expected;
    }
    fit.chi2_norm = chi2 / static_cast<double>(table.rows.size() - 1);
    return fit;
}

ZipfComparison zipf_report(const RankFrequencyTable& before, const RankFrequencyTable& after,
                           const std::string& csv_out_path) {
    ZipfComparison cmp;
    cmp.before = fit_zipf(before);
    cmp.after = fit_zipf(after);

    if (!csv_out_path.empty()) {
        std::ofstream out(csv_out_path);
        if (!out) throw IoError("cannot write zipf report: " + csv_out_path);
        out << "stage,rank,surface,frequency,fitted\n";
        auto dump = [&](const char* stage, const RankFrequencyTable& t, const ZipfFit& fit) {
            for (const auto& row : t.rows) {
                out << stage << "," << row.rank << ",\"" << row.surface << "\"," << row.frequency
                    << "," << fit.c / static_cast<double>(row.rank) << "\n";
            }
        };
        dump("before", before, cmp.before);
        dump("after", after, cmp.after);
    }
    return cmp;
}

}  // namespace kg::zipf
