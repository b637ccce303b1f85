#include "sre/io.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <vector>

#include "sre/problem.hpp"
#include "sre/riccati.hpp"

namespace sre {

std::string format_double(double x) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", x);
    return buf;
}

void write_mat_path_csv(const std::string& file, const MatPath& path) {
    std::ofstream out(file, std::ios::binary);
    if (!out) throw Error("cannot open for writing: " + file);

    const Eigen::Index n = path.dim();
    out << "t";
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j < n; ++j) {
            out << ",m_" << i << "_" << j;
        }
    }
    out << "\n";

    const int first = path.blown_up() ? path.blow_up_node() + 1 : 0;
    for (int k = first; k < path.nodes(); ++k) {
        out << format_double(path.grid().node(k));
        const Mat& m = path[k];
        for (Eigen::Index i = 0; i < n; ++i) {
            for (Eigen::Index j = 0; j < n; ++j) {
                out << "," << format_double(m(i, j));
            }
        }
        out << "\n";
    }
}

MatPath read_mat_path_csv(const std::string& file) {
    std::ifstream in(file, std::ios::binary);
    if (!in) throw Error("cannot open for reading: " + file);

    std::string header;
    if (!std::getline(in, header)) throw Error("empty trajectory file: " + file);
    std::size_t cols = 0;
    for (char c : header) {
        if (c == ',') ++cols;
    }
    const auto n = static_cast<Eigen::Index>(std::llround(std::sqrt(double(cols))));
    if (n < 1 || static_cast<std::size_t>(n) * static_cast<std::size_t>(n) != cols) {
        throw Error("trajectory header is not an n*n matrix layout: " + file);
    }

    std::vector<double> times;
    std::vector<Mat> values;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::istringstream row(line);
        std::string cell;
        if (!std::getline(row, cell, ',')) break;
        times.push_back(std::strtod(cell.c_str(), nullptr));
        Mat m(n, n);
        for (Eigen::Index i = 0; i < n; ++i) {
            for (Eigen::Index j = 0; j < n; ++j) {
                if (!std::getline(row, cell, ',')) {
                    throw Error("short row in trajectory file: " + file);
                }
                m(i, j) = std::strtod(cell.c_str(), nullptr);
            }
        }
        values.push_back(std::move(m));
    }
    if (times.size() < 2) throw Error("trajectory needs at least two rows: " + file);
    const TimeGrid grid(times.back(), static_cast<int>(times.size()) - 1);
    return MatPath(grid, std::move(values));
}

nlohmann::json mat_to_json(const Mat& m) {
    nlohmann::json arr = nlohmann::json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        for (Eigen::Index j = 0; j < m.cols(); ++j) {
            arr.push_back(m(i, j));
        }
    }
    return arr;
}

nlohmann::json to_json(const AssumptionIReport& rep) {
    return {
        {"max_rtil_norm", rep.max_rtil_norm},
        {"min_eig_qtil", rep.min_eig_qtil},
        {"tol", rep.tol},
        {"rtil_pass", rep.rtil_pass},
        {"qtil_pass", rep.qtil_pass},
        {"pass", rep.pass},
    };
}

nlohmann::json to_json(const AssumptionIIReport& rep) {
    return {
        {"min_eig_kt", rep.min_eig_kt},
        {"max_eig_kt", rep.max_eig_kt},
        {"delta", rep.delta},
        {"pass", rep.pass},
    };
}

nlohmann::json to_json(const IterationReport& rep) {
    return {
        {"iterations", rep.iterations},
        {"sup_diff_per_iter", rep.sup_diff_per_iter},
        {"monotonicity_margin_per_iter", rep.monotonicity_margin_per_iter},
        {"converged", rep.converged},
    };
}

nlohmann::json to_json(const SolveReport& rep) {
    return {
        {"sre_residual_max", rep.sre_residual_max},
        {"inverse_identity_max", rep.inverse_identity_max},
        {"min_eig_k_over_time", rep.min_eig_k_over_time},
        {"lower_bound",
         {{"margin", rep.lower_bound_margin},
          {"delta", rep.lower_bound_delta},
          {"beta0", rep.lower_bound_beta0},
          {"tol", rep.bound_tol},
          {"pass", rep.bound_pass}}},
        {"terminal_exact", rep.terminal_exact},
        {"positivity_ok", rep.positivity_ok},
        {"assumption_i", to_json(rep.assumption_i)},
        {"assumption_ii", to_json(rep.assumption_ii)},
        {"iteration", to_json(rep.iteration)},
        {"tolerances",
         {{"residual_tol", rep.residual_tol},
          {"identity_tol", rep.identity_tol},
          {"bound_tol", rep.bound_tol}}},
        {"residual_pass", rep.residual_pass},
        {"identity_pass", rep.identity_pass},
        {"all_pass", rep.all_pass()},
    };
}

} // namespace sre
