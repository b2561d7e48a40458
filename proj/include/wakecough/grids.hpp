#ifndef WAKECOUGH_GRIDS_HPP
#define WAKECOUGH_GRIDS_HPP

#include <string>
#include <vector>

namespace wakecough {

// Parses a hyperparameter grid expression into its value list. Accepted
// forms (unicode ellipsis/multiplication/minus signs are normalized):
//   "2, 5 to 100 with step of 5"      prefix values + arithmetic range
//   "0 to 1 in steps of 0.05"         arithmetic range
//   "2^k, k=9, ... 12"                base^k over an exponent range
//   "10^i where i=-7, ... 7"
//   "3 x 2^k where k=3, 4, 5"         coefficient * base^k over a list
//   "10 x k, k=7, 10, 12, 15"         coefficient * k over a list
//   "24, 48, 96"                      plain list
std::vector<double> parse_grid_expr(const std::string& expr);

// True if value matches a grid entry within a relative tolerance.
bool on_grid(double value, const std::vector<double>& grid, double rel_tol = 1e-9);

// The hyperparameter grids of the reference experiment design, built by
// parsing their verbatim expressions.
struct PaperGrids {
    std::vector<double> frame_lengths; // 2^k, k=9..12
    std::vector<double> frame_counts;  // 10*k, k in {7,10,12,15}
    std::vector<double> num_subjects;  // 5..51 step 5
    std::vector<double> cough_seconds; // 2, 5..100 step 5
    std::vector<double> pow10;         // 10^i, i=-7..7 (LR/SVM reg, gamma)
    std::vector<double> penalty_steps; // 0..1 step 0.05 (l1/l2)
    std::vector<double> mlp_hidden;    // 70..150 step 20
    std::vector<double> cnn_filters;   // 3*2^k, k=3..5
    std::vector<double> cnn_kernel;    // 2, 3
    std::vector<double> cnn_dropout;   // 0.1..0.5 step 0.2
    std::vector<double> cnn_dense;     // 2^k, k=4,5
    std::vector<double> cnn_batch;     // 2^k, k=6..8
    std::vector<double> cnn_epochs;    // 10..200 step 20 -> {10,...,190}
};

const PaperGrids& paper_grids();

} // namespace wakecough

#endif
