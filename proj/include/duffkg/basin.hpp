// Fate maps over a rectangle of the phase plane.

#pragma once

#include "duffkg/classifier.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace duffkg {

struct BasinJob {
    double u_min = -3.0;
    double u_max = 3.0;
    double v_min = -3.0;
    double v_max = 3.0;
    int nx = 300;
    int ny = 300;
    double gamma = 0.0;
    IntegratorOptions integrator;
    int threads = 1;
    std::string csv_path;  ///< empty: not written
    std::string pgm_path;  ///< empty: not written

    void validate() const;
    /// Pixel centres; row 0 is the top of the image (v = v_max side).
    double u_at(int col) const;
    double v_at(int row) const;
};

struct BasinMap {
    int nx = 0;
    int ny = 0;
    std::vector<State> initial;  ///< row-major, row 0 on top
    std::vector<Fate> fates;
};

/// Grey level per fate: BlowUp 0, DecayZero 255, ConvergePlus 200,
/// ConvergeMinus 100, Undetermined 128.
std::uint8_t fate_grey(FateKind k);

/// Classifies every pixel on a pool of worker threads; the result (and any
/// files written) depend only on the job, not on the thread count.
/// Throws std::runtime_error when an output path cannot be written.
BasinMap run_basin(const BasinJob& job);

void write_basin_csv(const std::string& path, const BasinJob& job, const BasinMap& map);
void write_basin_pgm(const std::string& path, const BasinMap& map);

}  // namespace duffkg
