#pragma once

// Umbrella header for the full toolkit.

#include "bibmap/classifier.hpp"
#include "bibmap/csv.hpp"
#include "bibmap/defects.hpp"
#include "bibmap/errors.hpp"
#include "bibmap/extsort.hpp"
#include "bibmap/index.hpp"
#include "bibmap/ingest.hpp"
#include "bibmap/line_reader.hpp"
#include "bibmap/mapper.hpp"
#include "bibmap/pid.hpp"
#include "bibmap/pipeline.hpp"
#include "bibmap/provenance.hpp"
#include "bibmap/report.hpp"
#include "bibmap/resolver.hpp"
#include "bibmap/util.hpp"
#include "bibmap/version.hpp"
