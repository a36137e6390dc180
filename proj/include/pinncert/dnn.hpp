#pragma once

#include "pinncert/dnn/activation.hpp"
#include "pinncert/dnn/checkpoint.hpp"
#include "pinncert/dnn/derivatives.hpp"
#include "pinncert/dnn/jet.hpp"
#include "pinncert/dnn/network.hpp"
