#include "duffkg/basin.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <fstream>
#include <mutex>
#include <stdexcept>
#include <thread>

namespace duffkg {

void BasinJob::validate() const {
    if (!(u_min < u_max)) throw std::invalid_argument("basin: u_min must be below u_max");
    if (!(v_min < v_max)) throw std::invalid_argument("basin: v_min must be below v_max");
    if (nx < 1 || ny < 1) throw std::invalid_argument("basin: resolution must be at least 1x1");
    if (threads < 1) throw std::invalid_argument("basin: threads must be positive");
    integrator.validate();
}

double BasinJob::u_at(int col) const { return u_min + (u_max - u_min) * (col + 0.5) / nx; }

double BasinJob::v_at(int row) const { return v_max - (v_max - v_min) * (row + 0.5) / ny; }

std::uint8_t fate_grey(FateKind k) {
    switch (k) {
        case FateKind::BlowUp: return 0;
        case FateKind::DecayZero: return 255;
        case FateKind::ConvergePlus: return 200;
        case FateKind::ConvergeMinus: return 100;
        case FateKind::Undetermined: return 128;
    }
    return 128;
}

namespace {

void check_writable(const std::string& path) {
    if (path.empty()) return;
    std::ofstream probe(path, std::ios::binary | std::ios::app);
    if (!probe) throw std::runtime_error("cannot write " + path);
}

}  // namespace

BasinMap run_basin(const BasinJob& job) {
    job.validate();
    // Fail before the sweep rather than after it.
    check_writable(job.csv_path);
    check_writable(job.pgm_path);

    BasinMap map;
    map.nx = job.nx;
    map.ny = job.ny;
    const std::size_t total = static_cast<std::size_t>(job.nx) * static_cast<std::size_t>(job.ny);
    map.initial.reserve(total);
    for (int r = 0; r < job.ny; ++r) {
        for (int c = 0; c < job.nx; ++c) map.initial.emplace_back(job.u_at(c), job.v_at(r));
    }
    map.fates.resize(total);

    const Damping gamma(job.gamma);
    std::atomic<int> next_row{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    auto worker = [&]() {
        try {
            for (int r = next_row++; r < job.ny; r = next_row++) {
                for (int c = 0; c < job.nx; ++c) {
                    const std::size_t i = static_cast<std::size_t>(r) * job.nx + c;
                    map.fates[i] = classify_fate(map.initial[i], gamma, job.integrator);
                }
            }
        } catch (...) {
            std::lock_guard lock(failure_mutex);
            if (!failure) failure = std::current_exception();
            next_row = job.ny;
        }
    };
    const int n_threads = std::min(job.threads, job.ny);
    std::vector<std::thread> pool;
    for (int t = 1; t < n_threads; ++t) pool.emplace_back(worker);
    worker();
    for (auto& th : pool) th.join();
    if (failure) std::rethrow_exception(failure);

    if (!job.csv_path.empty()) write_basin_csv(job.csv_path, job, map);
    if (!job.pgm_path.empty()) write_basin_pgm(job.pgm_path, map);
    return map;
}

void write_basin_csv(const std::string& path, const BasinJob& job, const BasinMap& map) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << kFateCsvHeader << '\n';
    for (std::size_t i = 0; i < map.fates.size(); ++i) out << fate_csv_row(map.initial[i], job.gamma, map.fates[i]) << '\n';
    if (!out) throw std::runtime_error("write failed: " + path);
}

void write_basin_pgm(const std::string& path, const BasinMap& map) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << "P5\n" << map.nx << ' ' << map.ny << "\n255\n";
    std::vector<char> pixels(map.fates.size());
    for (std::size_t i = 0; i < pixels.size(); ++i) pixels[i] = static_cast<char>(fate_grey(map.fates[i].kind));
    out.write(pixels.data(), static_cast<std::streamsize>(pixels.size()));
    if (!out) throw std::runtime_error("write failed: " + path);
}

}  // namespace duffkg
