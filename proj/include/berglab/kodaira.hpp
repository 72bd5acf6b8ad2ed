#pragma once
#include "berglab/hilbert.hpp"
