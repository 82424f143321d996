#pragma once

#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "aiger.hpp"
#include "mulgen.hpp"
#include "simulate.hpp"

namespace reveal
{

struct template_record
{
  architecture_label label;
  std::string path; // relative to the library directory
  uint32_t gates{ 0 };
  uint32_t ha_count{ 0 };
  uint32_t fa_count{ 0 };
};

/*! \brief Index over an on-disk directory of self-checked reference multipliers. */
struct library_index
{
  std::filesystem::path dir;
  std::vector<template_record> records;

  std::optional<template_record> find( architecture_label const& label ) const
  {
    for ( auto const& r : records )
    {
      if ( r.label == label )
      {
        return r;
      }
    }
    return std::nullopt;
  }

  bool has_width( uint32_t width ) const
  {
    for ( auto const& r : records )
    {
      if ( r.label.width == width )
      {
        return true;
      }
    }
    return false;
  }

  aig load( template_record const& record ) const
  {
    std::ifstream in( dir / record.path, std::ios::binary );
    if ( !in )
    {
      throw std::runtime_error( "library: cannot open " + ( dir / record.path ).string() );
    }
    std::stringstream buffer;
    buffer << in.rdbuf();
    return parse_aiger( buffer.str() );
  }
};

/*! \brief Generate, self-check and store one AIGER file per (width, label).
 *
 * Each template is validated against integer multiplication on 10^4 random
 * vectors before it is indexed; a failing template is never written into the
 * index.  Rebuilding over an existing directory produces an identical index.
 */
inline library_index build_template_library( std::vector<uint32_t> const& widths,
                                             std::vector<architecture_label> const& labels,
                                             std::filesystem::path const& dir,
                                             uint64_t self_check_vectors = 10000 )
{
  std::filesystem::create_directories( dir );
  library_index index;
  index.dir = dir;

  std::vector<architecture_label> sorted;
  for ( uint32_t w : widths )
  {
    for ( auto label : labels )
    {
      label.width = w;
      if ( label.ppg == ppg_kind::booth_radix4 && w < 4 )
      {
        continue;
      }
      sorted.push_back( label );
    }
  }
  std::sort( sorted.begin(), sorted.end() );
  sorted.erase( std::unique( sorted.begin(), sorted.end() ), sorted.end() );

  for ( auto const& label : sorted )
  {
    auto const generated = generate_multiplier( label );
    if ( !random_product_check( generated.circuit, label.width, self_check_vectors, 0xa5e11ull ) )
    {
      throw std::runtime_error( "library: self-check failed for template " + label.code() );
    }
    std::string const filename = label.code() + ".aig";
    std::ofstream out( dir / filename, std::ios::binary | std::ios::trunc );
    out << write_aiger( generated.circuit, aiger_format::binary );
    out.close();
    template_record record;
    record.label = label;
    record.path = filename;
    record.gates = generated.circuit.num_gates();
    record.ha_count = generated.log.ha;
    record.fa_count = generated.log.fa;
    index.records.push_back( record );
  }

  std::ofstream tsv( dir / "index.tsv", std::ios::trunc );
  tsv << "path\twidth\tppg\tppa\tfsa\tgates\tha_count\tfa_count\n";
  for ( auto const& r : index.records )
  {
    tsv << r.path << '\t' << r.label.width << '\t' << ppg_code( r.label.ppg ) << '\t'
        << ppa_code( r.label.ppa ) << '\t' << fsa_code( r.label.fsa ) << '\t' << r.gates << '\t'
        << r.ha_count << '\t' << r.fa_count << '\n';
  }
  return index;
}

/*! \brief Read an index.tsv written by build_template_library. */
inline library_index load_library_index( std::filesystem::path const& dir )
{
  std::ifstream in( dir / "index.tsv" );
  if ( !in )
  {
    throw std::runtime_error( "library: no index.tsv in " + dir.string() );
  }
  library_index index;
  index.dir = dir;
  std::string line;
  std::getline( in, line ); // header
  while ( std::getline( in, line ) )
  {
    if ( line.empty() )
    {
      continue;
    }
    std::vector<std::string> fields;
    size_t start = 0;
    while ( true )
    {
      size_t const pos = line.find( '\t', start );
      fields.push_back( line.substr( start, pos == std::string::npos ? pos : pos - start ) );
      if ( pos == std::string::npos )
      {
        break;
      }
      start = pos + 1;
    }
    if ( fields.size() != 8 )
    {
      throw std::runtime_error( "library: malformed index line: " + line );
    }
    template_record r;
    r.path = fields[0];
    auto const ppg = parse_ppg( fields[2] );
    auto const ppa = parse_ppa( fields[3] );
    auto const fsa = parse_fsa( fields[4] );
    if ( !ppg || !ppa || !fsa )
    {
      throw std::runtime_error( "library: unknown stage code in index line: " + line );
    }
    r.label = { *ppg, *ppa, *fsa, static_cast<uint32_t>( std::stoul( fields[1] ) ) };
    r.gates = static_cast<uint32_t>( std::stoul( fields[5] ) );
    r.ha_count = static_cast<uint32_t>( std::stoul( fields[6] ) );
    r.fa_count = static_cast<uint32_t>( std::stoul( fields[7] ) );
    index.records.push_back( r );
  }
  return index;
}

struct template_lookup_result
{
  std::vector<std::pair<architecture_label, aig>> templates; // in rank order
  std::vector<std::string> warnings;
};

/*! \brief Fetch templates for ranked labels; missing ranks are skipped with a
 * warning, and an empty result is an error.
 */
inline template_lookup_result lookup_templates( library_index const& index, uint32_t width,
                                                std::vector<architecture_label> ranked_labels )
{
  if ( !index.has_width( width ) )
  {
    throw std::runtime_error( "library: no template for width " + std::to_string( width ) );
  }
  template_lookup_result result;
  for ( auto label : ranked_labels )
  {
    label.width = width;
    auto const record = index.find( label );
    if ( !record )
    {
      result.warnings.push_back( "no template for " + label.code() + ", skipping rank" );
      continue;
    }
    result.templates.push_back( { label, index.load( *record ) } );
  }
  if ( result.templates.empty() )
  {
    throw std::runtime_error( "library: no template found for any requested rank" );
  }
  return result;
}

} // namespace reveal
