#pragma once

#include <cstdint>

#include <json.hpp>

#include "test_support.hpp"

namespace xwalk::testing {

// Spot-A camera, one pedestrian standing near the kerb at (7.5, 2) m, and three
// vehicles passing in the x = 3.75 m lane towards it. `accelerating` vehicles
// speed up as they close in (y = 38 - 3t - t^2); otherwise they brake
// (y = 38 - 11.7t + t^2). Both stay within 2 m/s^2.
inline nlohmann::json approach_scene(bool accelerating, double noise_px, std::uint64_t seed)
{
    const double pass_s = accelerating ? 4.3 : 5.5;
    nlohmann::json agents = nlohmann::json::array();
    for (int k = 0; k < 3; ++k) {
        const double t0 = 6.0 * k;
        nlohmann::json wps = nlohmann::json::array();
        for (double t = 0; t <= pass_s + 1e-9; t += 0.1) {
            const double y = accelerating ? 38 - 3 * t - t * t : 38 - 11.7 * t + t * t;
            wps.push_back({t0 + t, 3.75, y});
        }
        agents.push_back({{"class", "vehicle"}, {"waypoints", wps}});
    }
    agents.push_back({{"class", "pedestrian"}, {"waypoints", {{0, 7.5, 2}, {18, 7.7, 2}}}});

    nlohmann::json spec;
    spec["duration_s"] = 18.0;
    spec["noise_px"] = noise_px;
    spec["seed"] = seed;
    spec["scene"] = scene_config_to_json(spot_a_config());
    spec["agents"] = agents;
    return spec;
}

} // namespace xwalk::testing
