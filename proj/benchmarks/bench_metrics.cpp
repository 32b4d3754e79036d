// Compares the OpenMP kernels against their serial references: batch text
// scoring and the per-question Welch grid. Also verifies the outputs match
// before trusting any timing.

#include <chrono>
#include <cstdio>
#include <string>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "ebias/lexmetrics.hpp"
#include "ebias/mock_gateway.hpp"
#include "ebias/rng.hpp"
#include "ebias/stats.hpp"

using namespace ebias;

namespace {

double seconds(std::chrono::steady_clock::time_point a, std::chrono::steady_clock::time_point b) {
    return std::chrono::duration<double>(b - a).count();
}

std::vector<std::string> make_texts(std::size_t n, std::size_t words) {
    Rng rng(99);
    std::vector<std::string> texts;
    texts.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        std::string text;
        const std::uint64_t vocabulary = 24 + rng.below(60);
        const std::uint64_t offset = rng.below(100000);
        for (std::size_t w = 0; w < words; ++w) {
            if (!text.empty()) text += ' ';
            text += mock_word(offset + rng.below(vocabulary));
        }
        texts.push_back(std::move(text));
    }
    return texts;
}

std::vector<CellSamples> make_grid(std::size_t pairs, std::size_t iterations) {
    Rng rng(7);
    std::vector<CellSamples> cells;
    for (Metric metric : kAllMetrics) {
        CellSamples cell;
        cell.category = "Bench";
        cell.model = "bench";
        cell.metric = metric;
        for (std::size_t p = 0; p < pairs; ++p) {
            PairSamples samples;
            samples.pair_id = "p" + std::to_string(p);
            for (std::size_t i = 0; i < iterations; ++i) {
                samples.female.push_back(rng.unit() * 4 + 1);
                samples.male.push_back(rng.unit() * 4 + 1);
            }
            cell.pairs.push_back(std::move(samples));
        }
        cells.push_back(std::move(cell));
    }
    return cells;
}

} // namespace

int main(int argc, char** argv) {
    std::size_t n_texts = 20000;
    std::size_t words = 150;
    std::size_t pairs = 2000;
    std::size_t iterations = 50;
    for (int i = 1; i + 1 < argc; i += 2) {
        const std::string flag = argv[i];
        const auto value = static_cast<std::size_t>(std::stoull(argv[i + 1]));
        if (flag == "--texts") n_texts = value;
        else if (flag == "--words") words = value;
        else if (flag == "--pairs") pairs = value;
        else if (flag == "--iterations") iterations = value;
    }

#ifdef _OPENMP
    std::printf("openmp: %d thread(s)\n", omp_get_max_threads());
#else
    std::printf("openmp: disabled at build time\n");
#endif

    {
        const auto texts = make_texts(n_texts, words);
        const auto t0 = std::chrono::steady_clock::now();
        const auto serial = score_texts_serial(texts, Granularity::Word);
        const auto t1 = std::chrono::steady_clock::now();
        const auto parallel = score_texts(texts, Granularity::Word);
        const auto t2 = std::chrono::steady_clock::now();

        for (std::size_t i = 0; i < serial.size(); ++i) {
            if (serial[i].metrics.entropy != parallel[i].metrics.entropy) {
                std::printf("MISMATCH at text %zu\n", i);
                return 1;
            }
        }
        const double ts = seconds(t0, t1);
        const double tp = seconds(t1, t2);
        std::printf("batch metrics   %zu texts x %zu words   serial %.3f s   openmp %.3f s   speedup %.2fx\n",
                    n_texts, words, ts, tp, ts / tp);
    }

    {
        const auto cells = make_grid(pairs, iterations);
        const auto t0 = std::chrono::steady_clock::now();
        const auto serial = per_question_variability_serial(cells);
        const auto t1 = std::chrono::steady_clock::now();
        const auto parallel = per_question_variability(cells);
        const auto t2 = std::chrono::steady_clock::now();

        for (std::size_t i = 0; i < serial.rows.size(); ++i) {
            if (serial.rows[i].n_significant != parallel.rows[i].n_significant) {
                std::printf("MISMATCH in cell %zu\n", i);
                return 1;
            }
        }
        const double ts = seconds(t0, t1);
        const double tp = seconds(t1, t2);
        std::printf("welch grid      %zu pairs x %zu iters   serial %.3f s   openmp %.3f s   speedup %.2fx\n",
                    pairs, iterations, ts, tp, ts / tp);
    }
    return 0;
}
