#pragma once

#include "npc/classifier_lut.hpp"
#include "npc/contrast.hpp"
#include "npc/distribution.hpp"
#include "npc/error.hpp"
#include "npc/oracle.hpp"
#include "npc/remap.hpp"
#include "npc/report.hpp"
#include "npc/value_domain.hpp"
