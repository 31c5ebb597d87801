#include "lumen/gpio.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <vector>

namespace lumen {
namespace {

const SupplyRails kRails{};

PinConfig input_pull_up(double ohms = kDefaultPullOhms) {
    return configure_pin({0, PinMode::DigitalInput, DriveState::NotDriven, PullMode::PullUp, ohms},
                         kRails);
}

PinConfig input_pull_down(double ohms = kDefaultPullOhms) {
    return configure_pin({1, PinMode::DigitalInput, DriveState::NotDriven, PullMode::PullDown, ohms},
                         kRails);
}

TEST(ConfigurePin, AcceptsInputWithPullAndFillsDefaults) {
    const PinConfig pin = configure_pin(
        {3, PinMode::DigitalInput, DriveState::NotDriven, PullMode::PullUp, 35'000.0}, kRails);
    EXPECT_EQ(pin.drive, DriveState::NotDriven);
    EXPECT_DOUBLE_EQ(*pin.pull_resistance, 35'000.0);

    const PinConfig defaulted = configure_pin(
        {4, PinMode::DigitalInput, DriveState::NotDriven, PullMode::PullUp, std::nullopt}, kRails);
    EXPECT_DOUBLE_EQ(*defaulted.pull_resistance, kDefaultPullOhms);
}

TEST(ConfigurePin, AcceptsDrivenOutputUnchanged) {
    const PinConfig pin = configure_pin(
        {0, PinMode::DigitalOutput, DriveState::High, PullMode::NoPull, std::nullopt}, kRails);
    EXPECT_EQ(pin.mode, PinMode::DigitalOutput);
    EXPECT_EQ(pin.drive, DriveState::High);
    EXPECT_EQ(pin.pull, PullMode::NoPull);
}

TEST(ConfigurePin, RejectsContradictions) {
    EXPECT_THROW(configure_pin({0, PinMode::DigitalInput, DriveState::High, PullMode::NoPull,
                                std::nullopt},
                               kRails),
                 InvalidConfig);
    EXPECT_THROW(configure_pin({0, PinMode::DigitalOutput, DriveState::NotDriven, PullMode::NoPull,
                                std::nullopt},
                               kRails),
                 InvalidConfig);
    EXPECT_THROW(configure_pin({0, PinMode::DigitalInput, DriveState::NotDriven, PullMode::PullUp,
                                -10.0},
                               kRails),
                 InvalidConfig);
}

TEST(ConfigurePin, RejectsBadRails) {
    EXPECT_THROW(configure_pin({0, PinMode::DigitalOutput, DriveState::High, PullMode::NoPull,
                                std::nullopt},
                               SupplyRails{3.3, 0.5, 2.0}),
                 InvalidConfig);
}

TEST(ReadLogic, Thresholds) {
    EXPECT_EQ(read_logic(3.3, kRails), LogicLevel::High);
    EXPECT_EQ(read_logic(0.0, kRails), LogicLevel::Low);
    EXPECT_EQ(read_logic(1.65, kRails), LogicLevel::Indeterminate);
}

TEST(ResolveLedNode, DarkSenseNodeSitsAtRail) {
    const ResolvedNode node =
        resolve_led_node(input_pull_up(), input_pull_down(), 0.0, SenseMode::Photovoltaic, kRails);
    EXPECT_NEAR(node.v_anode, 3.3, 1e-12);
    EXPECT_NEAR(node.v_cathode, 0.0, 1e-12);
    EXPECT_DOUBLE_EQ(node.i_loop, 0.0);
    EXPECT_EQ(read_logic(node.v_anode, kRails), LogicLevel::High);
}

TEST(ResolveLedNode, IlluminatedSenseNodeFallsToGround) {
    // 1 mA photocurrent saturates the 35k/35k loop and drags the pulled-up
    // anode all the way down
    const ResolvedNode node =
        resolve_led_node(input_pull_up(), input_pull_down(), 1e-3, SenseMode::Photovoltaic, kRails);
    EXPECT_NEAR(node.v_anode, 0.0, 1e-9);
    EXPECT_EQ(read_logic(node.v_anode, kRails), LogicLevel::Low);
    EXPECT_NEAR(node.i_loop, 2.0 * 3.3 / 70'000.0, 1e-12);
}

TEST(ResolveLedNode, FloatsWithoutAnyDcPath) {
    const PinConfig floating_a = configure_pin(
        {0, PinMode::DigitalInput, DriveState::NotDriven, PullMode::NoPull, std::nullopt}, kRails);
    const PinConfig floating_b = configure_pin(
        {1, PinMode::DigitalInput, DriveState::NotDriven, PullMode::NoPull, std::nullopt}, kRails);
    EXPECT_THROW(
        resolve_led_node(floating_a, floating_b, 0.0, SenseMode::Photovoltaic, kRails),
        FloatingNode);
    EXPECT_THROW(
        resolve_led_node(input_pull_up(), floating_b, 1e-3, SenseMode::Photovoltaic, kRails),
        FloatingNode);
}

TEST(ResolveLedNode, RejectsNegativePhotocurrent) {
    EXPECT_THROW(
        resolve_led_node(input_pull_up(), input_pull_down(), -1e-6, SenseMode::Photovoltaic, kRails),
        InvalidConfig);
}

TEST(ResolveLedNode, DrivenPinsHoldTheirRails) {
    const PinConfig high = configure_pin(
        {0, PinMode::DigitalOutput, DriveState::High, PullMode::NoPull, std::nullopt}, kRails);
    const PinConfig low = configure_pin(
        {1, PinMode::DigitalOutput, DriveState::Low, PullMode::NoPull, std::nullopt}, kRails);
    const ResolvedNode node = resolve_led_node(high, low, 5e-3, SenseMode::Photovoltaic, kRails);
    EXPECT_DOUBLE_EQ(node.v_anode, 3.3);
    EXPECT_DOUBLE_EQ(node.v_cathode, 0.0);
    EXPECT_DOUBLE_EQ(node.i_loop, 5e-3);
}

TEST(ResolveLedNode, SenseVoltageMonotoneInPhotocurrent) {
    const std::vector<double> pulls = {10'000.0, 35'000.0, 50'000.0};
    for (double up : pulls) {
        for (double down : pulls) {
            double previous = 4.0;
            for (double p = 0.0; p <= 2.5e-4; p += 5e-6) {
                const ResolvedNode node = resolve_led_node(input_pull_up(up), input_pull_down(down),
                                                           p, SenseMode::Photovoltaic, kRails);
                EXPECT_LE(node.v_anode, previous + 1e-12);
                EXPECT_GE(node.v_anode, 0.0);
                EXPECT_LE(node.v_anode, kRails.vdd);
                EXPECT_GE(node.v_cathode, 0.0);
                EXPECT_LE(node.v_cathode, kRails.vdd);
                EXPECT_GE(node.i_loop, 0.0);
                previous = node.v_anode;
            }
        }
    }
}

TEST(ResolveLedNode, PhotoconductiveModeNeverCrossesAThreshold) {
    const LogicLevel dark = read_logic(
        resolve_led_node(input_pull_up(), input_pull_down(), 0.0, SenseMode::Photoconductive, kRails)
            .v_anode,
        kRails);
    EXPECT_EQ(dark, LogicLevel::High);
    for (double p = 1e-9; p <= 1.0; p *= 10.0) {
        const ResolvedNode node = resolve_led_node(input_pull_up(), input_pull_down(), p,
                                                   SenseMode::Photoconductive, kRails);
        EXPECT_EQ(read_logic(node.v_anode, kRails), dark) << "photocurrent " << p;
        EXPECT_EQ(read_logic(node.v_cathode, kRails), LogicLevel::Low) << "photocurrent " << p;
    }
}

TEST(PhotoconductiveBiasRef, HoldsTheReferenceConstants) {
    const PhotoconductiveBiasRef ref;
    EXPECT_DOUBLE_EQ(ref.pull_up_ohms, 10'000.0);
    EXPECT_DOUBLE_EQ(ref.series_protect_ohms, 100.0);
    EXPECT_DOUBLE_EQ(ref.bias_volts, 0.033);
}

TEST(BoardDescription, BufferDrivenWiringExposesNoSenseNode) {
    const BoardDescription board{"buffered", LedWiring::BufferDriven, 0, 1};
    EXPECT_THROW(resolve_board_node(board, input_pull_up(), input_pull_down(), 1e-3,
                                    SenseMode::Photovoltaic, kRails),
                 FloatingNode);

    const BoardDescription direct{"dual", LedWiring::DualGpio, 0, 1};
    EXPECT_NO_THROW(resolve_board_node(direct, input_pull_up(), input_pull_down(), 1e-3,
                                       SenseMode::Photovoltaic, kRails));
}

TEST(SupplyRails, DefaultThresholdsFollowVdd) {
    const SupplyRails five = SupplyRails::with_vdd(5.0);
    EXPECT_DOUBLE_EQ(five.v_ih, 3.5);
    EXPECT_DOUBLE_EQ(five.v_il, 1.5);
    EXPECT_NO_THROW(five.validate());
}

}  // namespace
}  // namespace lumen
