#pragma once

#include <string>
#include <utility>
#include <vector>

namespace kg::zipf {

struct RankRow {
    int rank = 0;  // 1-based, contiguous
    std::string surface;
    long long frequency = 0;
};

struct RankFrequencyTable {
    std::vector<RankRow> rows;
};

struct ZipfFit {
    double c = 0.0;
    double chi2_norm = 0.0;
};

struct ZipfComparison {
    ZipfFit before;
    ZipfFit after;
};

/// Ranks name->frequency counts: optional single-token filter, sort by
/// descending frequency with lexicographic tie-break, truncate to top_n.
RankFrequencyTable rank_frequencies(const std::vector<std::pair<std::string, long long>>& counts,
                                    int top_n = 500, bool single_word_only = true);

/// Fits f = C/r in log space with the exponent fixed at -1. The closed form
/// is ln C = mean(ln f_r + ln r); chi2_norm is Pearson chi-squared over the
/// fitted values divided by (N - 1).
ZipfFit fit_zipf(const RankFrequencyTable& table);

/// Fits both tables and writes the plotted points as CSV
/// (stage,rank,surface,frequency,fitted).
ZipfComparison zipf_report(const RankFrequencyTable& before, const RankFrequencyTable& after,
                           const std::string& csv_out_path);

}  // namespace kg::zipf
