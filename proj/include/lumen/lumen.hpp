#pragma once

#include "lumen/channel.hpp"
#include "lumen/device_library.hpp"
#include "lumen/emulator.hpp"
#include "lumen/errors.hpp"
#include "lumen/framing.hpp"
#include "lumen/gpio.hpp"
#include "lumen/isa.hpp"
#include "lumen/led.hpp"
#include "lumen/link.hpp"
#include "lumen/manchester.hpp"
#include "lumen/rng.hpp"
#include "lumen/sweep.hpp"
