// SPDX-License-Identifier: Apache-2.0
//
// Reference strategies: the per-subcarrier narrowband variant with a
// per-subcarrier power split, and the digital-wideband named configuration.

#ifndef WHLISA_BASELINES_HPP
#define WHLISA_BASELINES_HPP

#include <vector>

#include "whlisa/lisa.hpp"
#include "whlisa/metrics.hpp"

namespace whlisa {

struct PerSubcarrierResult {
    std::vector<Solution> per_subcarrier; // each is an L=1 sub-problem
    double sum_rate = 0.0;
    int streams_allocated = 0;
};

/// Runs the digital allocation independently on each subcarrier with budget
/// p_tx / L; up to rf_tx streams per subcarrier.
inline PerSubcarrierResult lisa_per_subcarrier(const ChannelSet& channels,
                                               const SystemConfig& cfg) {
    cfg.validate();
    PerSubcarrierResult out;
    SystemConfig sub = cfg;
    sub.n_subcarriers = 1;
    sub.p_tx = cfg.p_tx / cfg.n_subcarriers;
    for (int ell = 0; ell < cfg.n_subcarriers; ++ell) {
        ChannelSet single(cfg.n_users);
        for (int k = 0; k < cfg.n_users; ++k)
            single[k] = {channels[k][ell]};
        LisaOptions opt;
        opt.mode = Mode::Digital;
        Solution sol = run_lisa(single, sub, opt);
        out.sum_rate += sol.sum_rate / cfg.n_subcarriers;
        out.streams_allocated += sol.n_streams();
        out.per_subcarrier.push_back(std::move(sol));
    }
    return out;
}

} // namespace whlisa

#endif
