#include "lumen/link.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "lumen/device_library.hpp"

namespace lumen {
namespace {

const DeviceLibrary& fixture() {
    static const DeviceLibrary library =
        load_device_library_file(std::string(LUMEN_DATA_DIR) + "/led_library.json");
    return library;
}

const LedDevice& device_named(const std::string& name) {
    const LedDevice* device = find_device(fixture(), name);
    if (device == nullptr) {
        throw std::runtime_error("fixture is missing " + name);
    }
    return *device;
}

std::vector<std::vector<std::uint8_t>> random_payloads(std::size_t count,
                                                       std::size_t max_bytes,
                                                       std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::vector<std::vector<std::uint8_t>> payloads(count);
    for (auto& payload : payloads) {
        payload.resize(1 + rng() % max_bytes);
        for (auto& byte : payload) {
            byte = static_cast<std::uint8_t>(rng());
        }
    }
    return payloads;
}

LinkScenario noiseless_eo() {
    LinkScenario scenario;
    scenario.bit_rate_hz = 1e6;
    scenario.modulator = Modulator{ModulatorKind::ElectroOptic};
    scenario.channel = ChannelParams{1.0, 0.0, 0.0, 1};
    scenario.device = device_named("5 mm blue LED");
    scenario.terminal = Terminal::Anode;
    scenario.excitation = ExcitationKind::Laser640;
    return scenario;
}

TEST(MeasureLink, NoiselessEoLinkIsErrorFree) {
    const auto payloads = random_payloads(50, 64, 0x1111);
    const LinkReport report = measure_link(payloads, noiseless_eo());
    EXPECT_EQ(report.frames_sent, 50u);
    EXPECT_EQ(report.frames_ok, 50u);
    EXPECT_EQ(report.bit_errors, 0u);
    EXPECT_DOUBLE_EQ(report.ber, 0.0);

    // goodput follows exactly from the frame layout at the raw bit rate
    std::uint64_t payload_bits = 0;
    std::uint64_t total_bits = 0;
    for (const auto& payload : payloads) {
        payload_bits += 8 * payload.size();
        total_bits += frame_bits(payload.size());
    }
    const double expected = 1e6 * static_cast<double>(payload_bits) /
                            static_cast<double>(total_bits);
    EXPECT_NEAR(report.goodput_bit_s, expected, expected * 1e-9);
    EXPECT_LE(report.goodput_bit_s, report.raw_bit_rate_hz);
}

TEST(MeasureLink, RoundTripsThousandRandomPayloadsNoiselessly) {
    const auto payloads = random_payloads(1000, 24, 0x2222);
    LinkScenario scenario = noiseless_eo();
    const LinkReport report = measure_link(payloads, scenario);
    EXPECT_EQ(report.frames_ok, 1000u);
    EXPECT_DOUBLE_EQ(report.ber, 0.0);
}

TEST(MeasureLink, PockelsCarriesLowKilobitRates) {
    const auto payloads = random_payloads(10, 32, 0x3333);
    LinkScenario scenario = noiseless_eo();
    scenario.modulator = Modulator{ModulatorKind::Pockels};
    scenario.bit_rate_hz = 4e3;
    const LinkReport report = measure_link(payloads, scenario);
    EXPECT_EQ(report.frames_ok, 10u);
    EXPECT_DOUBLE_EQ(report.ber, 0.0);
    EXPECT_GT(report.goodput_bit_s, 2e3);
    EXPECT_LT(report.goodput_bit_s, 4e3);
}

TEST(MeasureLink, ModulatorBudgetIsChargedAtTheFrameBitRate) {
    LinkScenario scenario = noiseless_eo();
    scenario.modulator = Modulator{ModulatorKind::Pockels};
    scenario.bit_rate_hz = 6e3;
    EXPECT_THROW(measure_link(random_payloads(1, 8, 1), scenario),
                 RateExceedsModulatorBandwidth);

    scenario = noiseless_eo();
    scenario.bit_rate_hz = 3e8;
    EXPECT_THROW(measure_link(random_payloads(1, 8, 1), scenario),
                 RateExceedsModulatorBandwidth);
}

TEST(MeasureLink, NonResponsiveDeviceReceivesNothing) {
    LinkScenario scenario = noiseless_eo();
    scenario.device = device_named("5 mm red diffuse LED");
    const LinkReport report = measure_link(random_payloads(5, 16, 0x4444), scenario);
    EXPECT_EQ(report.frames_ok, 0u);
    EXPECT_DOUBLE_EQ(report.ber, 1.0);
}

TEST(MeasureLink, PhotoconductiveSensingRecoversNoFrames) {
    LinkScenario scenario = noiseless_eo();
    scenario.sense_mode = SenseMode::Photoconductive;
    for (double peak = 1e-3; peak <= 1e6; peak *= 100.0) {
        scenario.peak_w_m2 = peak;
        const LinkReport report = measure_link(random_payloads(3, 16, 0x5555), scenario);
        EXPECT_EQ(report.frames_ok, 0u) << "peak " << peak;
    }
}

TEST(MeasureLink, BufferDrivenWiringHasNoSenseNode) {
    LinkScenario scenario = noiseless_eo();
    scenario.wiring = LedWiring::BufferDriven;
    EXPECT_THROW(measure_link(random_payloads(1, 8, 1), scenario), FloatingNode);
}

TEST(MeasureLink, DeterministicGivenTheSeed) {
    LinkScenario scenario = noiseless_eo();
    scenario.channel.noise_sigma_w_m2 = 2e-3;
    scenario.channel.seed = 77;
    const auto payloads = random_payloads(10, 32, 0x6666);
    const LinkReport a = measure_link(payloads, scenario);
    const LinkReport b = measure_link(payloads, scenario);
    EXPECT_EQ(a.bit_errors, b.bit_errors);
    EXPECT_EQ(a.frames_ok, b.frames_ok);
    EXPECT_DOUBLE_EQ(a.ber, b.ber);
    ASSERT_EQ(a.frames.size(), b.frames.size());
    for (std::size_t i = 0; i < a.frames.size(); ++i) {
        EXPECT_EQ(a.frames[i].errors, b.frames[i].errors);
        EXPECT_EQ(a.frames[i].ok, b.frames[i].ok);
    }
}

TEST(MeasureLink, MedianBerIsMonotoneInNoise) {
    const std::vector<double> sigmas = {5e-5, 6e-4, 6e-3};
    std::vector<double> medians;
    for (double sigma : sigmas) {
        std::vector<double> bers;
        for (std::uint64_t seed = 1; seed <= 21; ++seed) {
            LinkScenario scenario = noiseless_eo();
            scenario.channel.noise_sigma_w_m2 = sigma;
            scenario.channel.seed = seed;
            bers.push_back(measure_link(random_payloads(6, 16, seed), scenario).ber);
        }
        std::sort(bers.begin(), bers.end());
        medians.push_back(bers[bers.size() / 2]);
    }
    EXPECT_LE(medians[0], medians[1]);
    EXPECT_LE(medians[1], medians[2]);
    EXPECT_GT(medians[2], 0.0);  // the loudest channel must actually hurt
}

TEST(LinkReport, SerializesTheContractFields) {
    const LinkReport report = measure_link(random_payloads(3, 8, 9), noiseless_eo());
    const nlohmann::json json = link_report_json(report);
    for (const char* key : {"raw_bit_rate_hz", "goodput_bit_s", "bit_errors", "bits_total", "ber",
                            "frames_sent", "frames_ok"}) {
        EXPECT_TRUE(json.contains(key)) << key;
    }
    std::ostringstream csv;
    write_frames_csv(report, csv);
    EXPECT_NE(csv.str().find("frame_idx,bits,errors,ok\n0,"), std::string::npos);
}

}  // namespace
}  // namespace lumen
