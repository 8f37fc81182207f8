#pragma once

#include "core.hpp"
#include "format.hpp"
#include "kdtree.hpp"
#include "height_index.hpp"
#include "scene.hpp"
#include "measure.hpp"
#include "paraboloid.hpp"
#include "normal_bundle.hpp"
#include "abp.hpp"
#include "harnack.hpp"
#include "config.hpp"
#include "report.hpp"
