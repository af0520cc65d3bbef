// SPDX-License-Identifier: Apache-2.0
//
// fisac — simulation and optimization toolkit for multistatic sensing with
// movable-antenna transceivers.
// Copyright (C) 2026 the fisac authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef FISAC_SCENARIO_HPP
#define FISAC_SCENARIO_HPP

#include "common.hpp"
#include "rng.hpp"

#include <cmath>
#include <cstdint>
#include <fstream>
#include <istream>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

namespace fisac
{

enum class ChannelModel
{
    geometric,  // distance-based path losses on a disk topology
    normalized  // unit-variance channels, fixed sensing gain, pinned SNR
};

// Full experiment description.  Powers are stored in watts and SINR targets
// linear; dB/dBm only exist at the configuration boundary.
struct ScenarioConfig
{
    int m_t = 4;                      // ISAC transmitters
    int m_r = 2;                      // sensing receivers
    int k = 4;                        // communication users
    int n = 4;                        // movable elements per transmitter
    int l = 12;                       // propagation paths per user link
    double region_tx_lambda = 2.0;    // transmit aperture side length (wavelengths)
    double region_rx_lambda = 1.0;    // user aperture side length (wavelengths)
    double p_t_watt = dbm_to_watt(20.0);
    double gamma = db_to_linear(6.0); // per-user SINR target (linear)
    double p_fa = 0.05;               // false-alarm budget
    int t_snapshots = 16;             // coherent sensing snapshots
    ChannelModel model = ChannelModel::geometric;
    std::uint64_t seed = 1;
    double radius_m = 200.0;          // service-area disk radius
    double wavelength_m = 0.1;
    double noise_dbm = -95.0;         // receiver and user noise power
    double rcs_var = 1.0;             // target reflection variance per hop pair
    double pathloss_ref = 1e-4;       // reference gain at 1 m
    double pathloss_exp = 2.8;        // path-loss exponent
    double beta_normalized = 0.05;    // sensing gain under the normalized model
    double snr_normalized = 4.0;      // transmit SNR pinned by the normalized model
    std::optional<Vec2> target_m;     // explicit target position (defaults to random)

    double noise_watt() const
    {
        return model == ChannelModel::normalized ? p_t_watt / snr_normalized
                                                 : dbm_to_watt(noise_dbm);
    }

    std::vector<double> gammas() const
    {
        return std::vector<double>(std::size_t(k), gamma);
    }

    void validate() const
    {
        auto fail = [](const std::string &m) { throw config_error("config: " + m); };
        if (m_t < 1)
            fail("m_t must be >= 1");
        if (m_r < 1)
            fail("m_r must be >= 1");
        if (k < 0)
            fail("k must be >= 0");
        if (n < 1)
            fail("n must be >= 1");
        if (l < 1)
            fail("l must be >= 1");
        if (!(radius_m > 0.0))
            fail("radius_m must be positive for a nonzero device count");
        if (region_tx_lambda < 0.0 || region_rx_lambda < 0.0)
            fail("aperture sides must be >= 0");
        if (!(p_t_watt > 0.0))
            fail("transmit power must be positive");
        if (gamma < 0.0)
            fail("SINR target must be >= 0");
        if (!(p_fa > 0.0 && p_fa < 1.0))
            fail("p_fa must lie strictly in (0, 1)");
        if (t_snapshots < 1)
            fail("t_snapshots must be >= 1");
        if (!(wavelength_m > 0.0))
            fail("wavelength must be positive");
        if (!(rcs_var > 0.0))
            fail("reflection variance must be positive");
    }
};

namespace scenario_detail
{

inline std::string trim(const std::string &s)
{
    std::size_t b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos)
        return {};
    std::size_t e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

} // namespace scenario_detail

// Key-value configuration reader.  Lines hold `key = value` pairs; `[name]`
// headers group them visually without scoping the keys; `#` and `;` start
// comments.  Unknown keys and malformed values raise config_error carrying
// the offending line number so broken files are easy to fix.
inline ScenarioConfig load_scenario_config(std::istream &in,
                                           const std::string &origin = "<config>")
{
    ScenarioConfig cfg;
    std::string line;
    int lineno = 0;
    auto fail = [&](const std::string &msg) -> void
    { throw config_error(origin + ":" + std::to_string(lineno) + ": " + msg); };

    auto to_double = [&](const std::string &v) -> double
    {
        try
        {
            std::size_t used = 0;
            double x = std::stod(v, &used);
            if (used != v.size())
                fail("trailing characters after number '" + v + "'");
            return x;
        }
        catch (const config_error &)
        {
            throw;
        }
        catch (const std::exception &)
        {
            fail("expected a number, got '" + v + "'");
        }
        return 0.0; // unreachable
    };
    auto to_int = [&](const std::string &v) -> int
    {
        double x = to_double(v);
        if (x != std::floor(x) || std::abs(x) > 1e9)
            fail("expected an integer, got '" + v + "'");
        return int(x);
    };

    while (std::getline(in, line))
    {
        ++lineno;
        std::size_t cut = line.find_first_of("#;");
        if (cut != std::string::npos)
            line = line.substr(0, cut);
        line = scenario_detail::trim(line);
        if (line.empty())
            continue;
        if (line.front() == '[')
        {
            if (line.back() != ']')
                fail("unterminated section header");
            continue; // sections are cosmetic; keys share one namespace
        }
        std::size_t eq = line.find('=');
        if (eq == std::string::npos)
            fail("expected 'key = value'");
        std::string key = scenario_detail::trim(line.substr(0, eq));
        std::string value = scenario_detail::trim(line.substr(eq + 1));
        if (key.empty() || value.empty())
            fail("expected 'key = value'");

        if (key == "m_t")
            cfg.m_t = to_int(value);
        else if (key == "m_r")
            cfg.m_r = to_int(value);
        else if (key == "k")
            cfg.k = to_int(value);
        else if (key == "n")
            cfg.n = to_int(value);
        else if (key == "l")
            cfg.l = to_int(value);
        else if (key == "region_tx_lambda")
            cfg.region_tx_lambda = to_double(value);
        else if (key == "region_rx_lambda")
            cfg.region_rx_lambda = to_double(value);
        else if (key == "p_t_dbm")
            cfg.p_t_watt = dbm_to_watt(to_double(value));
        else if (key == "gamma_db")
            cfg.gamma = db_to_linear(to_double(value));
        else if (key == "p_fa")
            cfg.p_fa = to_double(value);
        else if (key == "t_snapshots")
            cfg.t_snapshots = to_int(value);
        else if (key == "model")
        {
            if (value == "geometric")
                cfg.model = ChannelModel::geometric;
            else if (value == "normalized")
                cfg.model = ChannelModel::normalized;
            else
                fail("model must be 'geometric' or 'normalized', got '" + value + "'");
        }
        else if (key == "seed")
        {
            double x = to_double(value);
            if (x < 0.0 || x != std::floor(x))
                fail("seed must be a nonnegative integer");
            cfg.seed = std::uint64_t(x);
        }
        else if (key == "radius_m")
            cfg.radius_m = to_double(value);
        else
            fail("unknown key '" + key + "'");
    }
    cfg.validate();
    return cfg;
}

inline ScenarioConfig load_scenario_config_file(const std::string &path)
{
    std::ifstream in(path);
    if (!in)
        throw config_error("config: cannot open '" + path + "'");
    return load_scenario_config(in, path);
}

// Placement of every device on the service disk (meters).
struct Topology
{
    std::vector<Vec2> ap_m;   // all access points
    std::vector<int> tx_idx;  // APs acting as ISAC transmitters
    std::vector<int> rx_idx;  // APs acting as sensing receivers, nearest first
    std::vector<Vec2> ue_m;   // users
    Vec2 target_m = Vec2::Zero();

    void serialize(std::ostream &os) const
    {
        os << "topology v1\n";
        auto put = [&os](const Vec2 &p)
        {
            char buf[64];
            std::snprintf(buf, sizeof buf, "%a %a\n", p.x(), p.y());
            os << buf;
        };
        os << "ap " << ap_m.size() << "\n";
        for (const auto &p : ap_m)
            put(p);
        os << "tx";
        for (int i : tx_idx)
            os << ' ' << i;
        os << "\nrx";
        for (int i : rx_idx)
            os << ' ' << i;
        os << "\nue " << ue_m.size() << "\n";
        for (const auto &p : ue_m)
            put(p);
        os << "target ";
        put(target_m);
    }
};

// Elevation/azimuth pair -> 2-D wave vector (the in-plane phase slope of a
// planar wavefront across the aperture).
inline Vec2 wave_vector(double phi, double psi)
{
    return {std::sin(phi) * std::cos(psi), std::cos(phi)};
}

// One transmitter-user link: per-path geometry at both ends plus complex
// path responses.  Angle rows are (elevation, azimuth); `aod`/`aoa` cache the
// corresponding wave vectors.
struct LinkChannel
{
    RMat aod_ang; // 2 x L, transmitter side
    RMat aoa_ang; // 2 x L, user side
    RMat aod;     // 2 x L wave vectors
    RMat aoa;     // 2 x L wave vectors
    Vec gains;    // L complex path responses
};

struct ChannelSet
{
    int m_t = 0, m_r = 0, k = 0, n = 0, l = 0;
    double wavelength_m = 0.1;
    std::vector<std::vector<LinkChannel>> links; // [t][k]
    RMat sensing_ang;                            // 2 x m_t: target direction per transmitter
    RMat sensing_wv;                             // 2 x m_t wave vectors
    RMat beta;                                   // m_t x m_r bistatic channel gains
    RMat rcs;                                    // m_t x m_r reflection variances
    double noise_ue = 0.0;                       // user noise power (watts)
    double noise_rx = 0.0;                       // sensing-receiver noise power (watts)
    double p_t = 0.0;                            // per-transmitter power budget (watts)

    void serialize(std::ostream &os) const
    {
        os << "channels v1 " << m_t << ' ' << m_r << ' ' << k << ' ' << n << ' ' << l << "\n";
        char buf[64];
        auto put = [&](double v)
        {
            std::snprintf(buf, sizeof buf, "%a ", v);
            os << buf;
        };
        put(wavelength_m);
        put(noise_ue);
        put(noise_rx);
        put(p_t);
        os << "\n";
        auto put_mat = [&](const RMat &m)
        {
            for (Eigen::Index c = 0; c < m.cols(); ++c)
                for (Eigen::Index r = 0; r < m.rows(); ++r)
                    put(m(r, c));
            os << "\n";
        };
        for (const auto &row : links)
            for (const auto &link : row)
            {
                put_mat(link.aod_ang);
                put_mat(link.aoa_ang);
                for (Eigen::Index i = 0; i < link.gains.size(); ++i)
                {
                    put(link.gains(i).real());
                    put(link.gains(i).imag());
                }
                os << "\n";
            }
        put_mat(sensing_ang);
        put_mat(beta);
        put_mat(rcs);
    }
};

struct Scenario
{
    Topology topology;
    ChannelSet channels;
    std::uint64_t derived_seed = 0; // for draws that must follow scenario generation
};

inline Vec2 draw_in_disk(Rng &rng, double radius)
{
    double r = radius * std::sqrt(rng.uniform());
    double a = two_pi * rng.uniform();
    return {r * std::cos(a), r * std::sin(a)};
}

inline Topology generate_topology(const ScenarioConfig &cfg, Rng &rng)
{
    cfg.validate();
    Topology topo;
    int m = cfg.m_t + cfg.m_r;
    topo.ap_m.reserve(m);
    for (int i = 0; i < m; ++i)
        topo.ap_m.push_back(draw_in_disk(rng, cfg.radius_m));
    topo.target_m = cfg.target_m ? *cfg.target_m : draw_in_disk(rng, cfg.radius_m);
    topo.ue_m.reserve(cfg.k);
    for (int i = 0; i < cfg.k; ++i)
        topo.ue_m.push_back(draw_in_disk(rng, cfg.radius_m));

    // receivers = the m_r closest APs to the target, ties broken by index
    std::vector<std::pair<double, int>> order;
    order.reserve(m);
    for (int i = 0; i < m; ++i)
        order.emplace_back((topo.ap_m[i] - topo.target_m).norm(), i);
    std::sort(order.begin(), order.end());
    topo.rx_idx.reserve(cfg.m_r);
    for (int r = 0; r < cfg.m_r; ++r)
        topo.rx_idx.push_back(order[r].second);
    std::vector<char> is_rx(m, 0);
    for (int i : topo.rx_idx)
        is_rx[std::size_t(i)] = 1;
    topo.tx_idx.reserve(cfg.m_t);
    for (int i = 0; i < m; ++i)
        if (!is_rx[std::size_t(i)])
            topo.tx_idx.push_back(i);
    return topo;
}

inline ChannelSet generate_channels(const Topology &topo, const ScenarioConfig &cfg, Rng &rng)
{
    cfg.validate();
    if (int(topo.tx_idx.size()) != cfg.m_t || int(topo.rx_idx.size()) != cfg.m_r ||
        int(topo.ue_m.size()) != cfg.k)
        throw contract_error("generate_channels: topology does not match the configuration");

    const bool geo = cfg.model == ChannelModel::geometric;
    ChannelSet ch;
    ch.m_t = cfg.m_t;
    ch.m_r = cfg.m_r;
    ch.k = cfg.k;
    ch.n = cfg.n;
    ch.l = cfg.l;
    ch.wavelength_m = cfg.wavelength_m;
    ch.noise_ue = cfg.noise_watt();
    ch.noise_rx = cfg.noise_watt();
    ch.p_t = cfg.p_t_watt;

    auto draw_angles = [&rng, &cfg](RMat &ang, RMat &wv)
    {
        ang.resize(2, cfg.l);
        wv.resize(2, cfg.l);
        for (int l = 0; l < cfg.l; ++l)
        {
            double phi = rng.uniform(0.0, pi);
            double psi = rng.uniform(0.0, pi);
            ang(0, l) = phi;
            ang(1, l) = psi;
            wv.col(l) = wave_vector(phi, psi);
        }
    };

    ch.links.resize(std::size_t(cfg.m_t));
    for (int t = 0; t < cfg.m_t; ++t)
    {
        ch.links[std::size_t(t)].resize(std::size_t(cfg.k));
        for (int k = 0; k < cfg.k; ++k)
        {
            LinkChannel &link = ch.links[std::size_t(t)][std::size_t(k)];
            draw_angles(link.aod_ang, link.aod);
            draw_angles(link.aoa_ang, link.aoa);
            double var = 1.0 / cfg.l;
            if (geo)
            {
                double d = (topo.ue_m[std::size_t(k)] - topo.ap_m[std::size_t(topo.tx_idx[std::size_t(t)])]).norm();
                if (d < 1e-6)
                    throw geometry_error("generate_channels: user " + std::to_string(k) +
                                         " coincides with transmitter " + std::to_string(t));
                var = cfg.pathloss_ref * std::pow(d, -cfg.pathloss_exp) / cfg.l;
            }
            link.gains.resize(cfg.l);
            for (int l = 0; l < cfg.l; ++l)
                link.gains(l) = rng.cnormal(var);
        }
    }

    ch.sensing_ang.resize(2, cfg.m_t);
    ch.sensing_wv.resize(2, cfg.m_t);
    for (int t = 0; t < cfg.m_t; ++t)
    {
        double phi = rng.uniform(0.0, pi);
        double psi = rng.uniform(0.0, pi);
        ch.sensing_ang(0, t) = phi;
        ch.sensing_ang(1, t) = psi;
        ch.sensing_wv.col(t) = wave_vector(phi, psi);
    }

    ch.beta.resize(cfg.m_t, cfg.m_r);
    ch.rcs.resize(cfg.m_t, cfg.m_r);
    for (int t = 0; t < cfg.m_t; ++t)
        for (int r = 0; r < cfg.m_r; ++r)
        {
            double b = cfg.beta_normalized;
            if (geo)
            {
                double dt = (topo.ap_m[std::size_t(topo.tx_idx[std::size_t(t)])] - topo.target_m).norm();
                double dr = (topo.ap_m[std::size_t(topo.rx_idx[std::size_t(r)])] - topo.target_m).norm();
                if (dt < 1e-6 || dr < 1e-6)
                    throw geometry_error("generate_channels: target coincides with an access point");
                b = cfg.wavelength_m * cfg.wavelength_m /
                    (std::pow(4.0 * pi, 3) * dt * dt * dr * dr);
            }
            ch.beta(t, r) = b;
            ch.rcs(t, r) = cfg.rcs_var;
        }
    return ch;
}

inline Scenario make_scenario(const ScenarioConfig &cfg)
{
    Rng rng(cfg.seed);
    Scenario s;
    s.topology = generate_topology(cfg, rng);
    s.channels = generate_channels(s.topology, cfg, rng);
    s.derived_seed = rng.raw();
    return s;
}

} // namespace fisac

#endif // FISAC_SCENARIO_HPP
