// SPDX-License-Identifier: Apache-2.0
//
// State carried through the greedy allocation loop and the final solution
// returned to callers.

#ifndef WHLISA_STATE_HPP
#define WHLISA_STATE_HPP

#include <cstdint>
#include <vector>

#include "whlisa/channel.hpp"

namespace whlisa {

enum class Mode { Digital, Hybrid };

struct ProjectorState {
    Matrix T;                // N x N transmit-side projector, T = B B^H
    Matrix T_basis;          // orthonormal basis B of range(T)
    std::vector<Matrix> S;   // per-user R x R combiner-side projectors
};

struct StreamAllocation {
    int user = -1;
    Vector q;                       // unit auxiliary precoder, length N
    Vector g;                       // unit combiner, length R
    Vector g_analog;                // unit-modulus analog combiner (hybrid)
    std::vector<std::uint8_t> beta; // per-subcarrier activity flags
};

/// Per-iteration diagnostics, recorded when tracing is enabled.
struct IterationTrace {
    int user = -1;
    Matrix T_before;
    Matrix T_after;
    Matrix S_after; // projector of the winning user after the update
    Matrix Pi_basis;
    int pi_rank = 0;
    double sum_rate = 0.0;
};

struct LisaState {
    std::vector<StreamAllocation> streams;
    std::vector<std::vector<int>> active;  // [ell] -> committed stream ids
    std::vector<Matrix> h_red;             // [ell] d x N composite rows
    std::vector<Matrix> q_red;             // [ell] N x d auxiliary precoders
    std::vector<Matrix> eff;               // [ell] d x d H_red * Q_red
    ProjectorState proj;
    std::vector<std::vector<double>> lambda; // per-subcarrier per-slot gains
    std::vector<std::vector<double>> power;  // per-subcarrier per-slot gamma^2
    double sum_rate = 0.0;
    std::vector<IterationTrace> trace;
};

struct Solution {
    std::vector<StreamAllocation> streams;
    std::vector<std::vector<int>> active;     // per-subcarrier stream ids
    std::vector<Matrix> precoders;            // per-subcarrier N x d effective
    std::vector<Matrix> baseband;             // per-subcarrier n_streams x d
    Matrix analog_precoder;                   // N x n_streams, empty in digital mode
    std::vector<std::vector<double>> lambda;  // per-subcarrier per-slot gains
    std::vector<std::vector<double>> power;   // per-subcarrier per-slot gamma^2
    double sum_rate = 0.0;
    Mode mode = Mode::Digital;
    std::vector<IterationTrace> trace;

    int n_streams() const { return static_cast<int>(streams.size()); }
    int n_subcarriers() const { return static_cast<int>(active.size()); }
};

} // namespace whlisa

#endif
