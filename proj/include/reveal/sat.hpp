#pragma once

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <vector>

#include "cnf.hpp"

namespace reveal
{

enum class sat_verdict : uint8_t
{
  satisfiable,
  unsatisfiable,
  unknown
};

struct sat_budget
{
  uint64_t max_conflicts{ std::numeric_limits<uint64_t>::max() };
  double max_seconds{ std::numeric_limits<double>::infinity() };
  std::atomic<bool> const* cancel{ nullptr };
};

/*! \brief Conflict-driven clause-learning solver.
 *
 * Two-watched-literal propagation, first-UIP learning with recursive clause
 * minimization, exponential VSIDS decisions with phase saving, Luby restarts
 * on a base of 64 conflicts and LBD-driven learnt-clause reduction.  Clauses
 * may be added between solve calls; satisfying assignments are checked
 * against every clause before they are reported.
 */
class sat_solver
{
public:
  void ensure_vars( int n )
  {
    while ( num_vars_ < n )
    {
      ++num_vars_;
      assigns_.push_back( -1 );
      levels_.push_back( 0 );
      reasons_.push_back( -1 );
      activity_.push_back( 0.0 );
      phase_.push_back( false );
      seen_.push_back( 0 );
      watches_.emplace_back();
      watches_.emplace_back();
      heap_index_.push_back( -1 );
      heap_insert( num_vars_ - 1 );
    }
  }

  int num_vars() const { return num_vars_; }

  /*! \brief Add a clause in DIMACS convention; returns false on direct conflict. */
  bool add_clause( std::vector<int> const& dimacs_lits )
  {
    backtrack( 0 );
    std::vector<int> lits;
    for ( int l : dimacs_lits )
    {
      ensure_vars( std::abs( l ) );
      int const internal = encode( l );
      bool duplicate = false, tautology = false;
      for ( int other : lits )
      {
        duplicate = duplicate || other == internal;
        tautology = tautology || other == ( internal ^ 1 );
      }
      if ( tautology )
      {
        return true;
      }
      if ( !duplicate )
      {
        // drop literals already false at level zero, stop on true ones
        int const v = value( internal );
        if ( v == 1 && levels_[var( internal )] == 0 )
        {
          return true;
        }
        if ( v == 0 && levels_[var( internal )] == 0 )
        {
          continue;
        }
        lits.push_back( internal );
      }
    }
    if ( lits.empty() )
    {
      ok_ = false;
      return false;
    }
    if ( lits.size() == 1 )
    {
      if ( value( lits[0] ) == 0 )
      {
        ok_ = false;
        return false;
      }
      if ( value( lits[0] ) == -1 )
      {
        enqueue( lits[0], -1 );
        ok_ = ok_ && propagate() == -1;
      }
      return ok_;
    }
    attach( add_clause_internal( lits, false ) );
    return true;
  }

  void add_cnf( cnf const& f )
  {
    ensure_vars( f.num_vars );
    for ( auto const& clause : f.clauses )
    {
      if ( !add_clause( clause ) )
      {
        return;
      }
    }
  }

  /*! \brief Solve under optional assumptions (DIMACS literals). */
  sat_verdict solve( std::vector<int> const& assumptions = {}, sat_budget const& budget = {} )
  {
    auto const start = std::chrono::steady_clock::now();
    backtrack( 0 );
    if ( !ok_ )
    {
      return sat_verdict::unsatisfiable;
    }
    if ( propagate() != -1 )
    {
      ok_ = false;
      return sat_verdict::unsatisfiable;
    }
    uint64_t conflicts = 0;
    uint64_t restart_count = 0;
    uint64_t next_restart = 64 * luby( 1 );
    uint64_t props_since_check = 0;
    size_t assumption_pos = 0;

    while ( true )
    {
      int const conflict = propagate();
      props_since_check += 64;
      if ( props_since_check >= 4096 )
      {
        props_since_check = 0;
        if ( budget.cancel && budget.cancel->load( std::memory_order_relaxed ) )
        {
          return sat_verdict::unknown;
        }
        if ( std::chrono::duration<double>( std::chrono::steady_clock::now() - start ).count() >
             budget.max_seconds )
        {
          return sat_verdict::unknown;
        }
      }
      if ( conflict != -1 )
      {
        ++conflicts;
        if ( conflicts > budget.max_conflicts )
        {
          return sat_verdict::unknown;
        }
        if ( decision_level() == 0 )
        {
          ok_ = false;
          return sat_verdict::unsatisfiable;
        }
        // conflicts below the assumption frontier refute the assumptions
        if ( decision_level() <= assumption_level_ )
        {
          return sat_verdict::unsatisfiable;
        }
        std::vector<int> learnt;
        int backtrack_level = 0;
        analyze( conflict, learnt, backtrack_level );
        backtrack_level = std::max( backtrack_level, static_cast<int>( assumption_level_ ) );
        backtrack( backtrack_level );
        if ( learnt.size() == 1 )
        {
          if ( value( learnt[0] ) == 0 )
          {
            // the asserting literal clashes with an assumption
            if ( decision_level() == 0 )
            {
              ok_ = false;
            }
            return sat_verdict::unsatisfiable;
          }
          enqueue( learnt[0], -1 );
        }
        else
        {
          int const ref = add_clause_internal( learnt, true );
          attach( ref );
          enqueue( learnt[0], ref );
        }
        decay_activities();
        if ( conflicts >= next_restart )
        {
          ++restart_count;
          next_restart = conflicts + 64 * luby( restart_count + 1 );
          backtrack( static_cast<int>( assumption_level_ ) );
        }
        if ( learnts_.size() > 4000 + 100 * restart_count )
        {
          reduce_learnts();
        }
        continue;
      }

      // place pending assumptions, then branch
      if ( assumption_pos < assumptions.size() )
      {
        int const lit = encode( assumptions[assumption_pos] );
        ensure_vars( std::abs( assumptions[assumption_pos] ) );
        ++assumption_pos;
        if ( value( lit ) == 0 )
        {
          return sat_verdict::unsatisfiable;
        }
        if ( value( lit ) == -1 )
        {
          new_decision_level();
          assumption_level_ = decision_level();
          enqueue( lit, -1 );
        }
        else
        {
          assumption_level_ = decision_level();
        }
        continue;
      }

      int const decision = pick_branch();
      if ( decision == -1 )
      {
        if ( !verify_model() )
        {
          throw std::logic_error( "sat_solver: model verification failed" );
        }
        return sat_verdict::satisfiable;
      }
      new_decision_level();
      enqueue( decision, -1 );
    }
  }

  /*! \brief Value of a DIMACS variable in the last satisfying assignment. */
  bool model_value( int variable ) const
  {
    return assigns_[variable - 1] == 1;
  }

private:
  struct clause
  {
    bool learnt{ false };
    uint32_t lbd{ 0 };
    double activity{ 0.0 };
    std::vector<int> lits; // internal encoding
  };

  static int var( int internal ) { return internal >> 1; }
  static int encode( int dimacs ) { return dimacs > 0 ? 2 * ( dimacs - 1 ) : 2 * ( -dimacs - 1 ) + 1; }

  int value( int internal ) const
  {
    int const a = assigns_[var( internal )];
    if ( a == -1 )
    {
      return -1;
    }
    return ( internal & 1 ) ? 1 - a : a;
  }

  int decision_level() const { return static_cast<int>( trail_lim_.size() ); }

  void new_decision_level() { trail_lim_.push_back( static_cast<int>( trail_.size() ) ); }

  int add_clause_internal( std::vector<int> const& lits, bool learnt )
  {
    int const ref = static_cast<int>( clauses_.size() );
    clauses_.push_back( { learnt, 0, 0.0, lits } );
    if ( learnt )
    {
      learnts_.push_back( ref );
      clauses_[ref].lbd = compute_lbd( lits );
      clauses_[ref].activity = clause_bump_;
    }
    return ref;
  }

  void attach( int ref )
  {
    auto const& c = clauses_[ref];
    watches_[c.lits[0] ^ 1].push_back( ref );
    watches_[c.lits[1] ^ 1].push_back( ref );
  }

  uint32_t compute_lbd( std::vector<int> const& lits )
  {
    std::vector<int> seen_levels;
    for ( int l : lits )
    {
      int const lvl = levels_[var( l )];
      if ( std::find( seen_levels.begin(), seen_levels.end(), lvl ) == seen_levels.end() )
      {
        seen_levels.push_back( lvl );
      }
    }
    return static_cast<uint32_t>( seen_levels.size() );
  }

  void enqueue( int lit, int reason )
  {
    assigns_[var( lit )] = ( lit & 1 ) ? 0 : 1;
    levels_[var( lit )] = decision_level();
    reasons_[var( lit )] = reason;
    trail_.push_back( lit );
  }

  /*! \brief Unit propagation; returns the conflicting clause or -1. */
  int propagate()
  {
    while ( qhead_ < trail_.size() )
    {
      int const lit = trail_[qhead_++];
      auto& watch_list = watches_[lit];
      size_t keep = 0;
      for ( size_t i = 0; i < watch_list.size(); ++i )
      {
        int const ref = watch_list[i];
        auto& c = clauses_[ref];
        // normalize so lits[0] is the other watched literal
        int const falsified = lit ^ 1;
        if ( c.lits[0] == falsified )
        {
          std::swap( c.lits[0], c.lits[1] );
        }
        if ( value( c.lits[0] ) == 1 )
        {
          watch_list[keep++] = ref;
          continue;
        }
        bool moved = false;
        for ( size_t k = 2; k < c.lits.size(); ++k )
        {
          if ( value( c.lits[k] ) != 0 )
          {
            std::swap( c.lits[1], c.lits[k] );
            watches_[c.lits[1] ^ 1].push_back( ref );
            moved = true;
            break;
          }
        }
        if ( moved )
        {
          continue;
        }
        if ( value( c.lits[0] ) == 0 )
        {
          // conflict: restore the remaining watches
          for ( size_t k = i; k < watch_list.size(); ++k )
          {
            watch_list[keep++] = watch_list[k];
          }
          watch_list.resize( keep );
          qhead_ = trail_.size();
          return ref;
        }
        enqueue( c.lits[0], ref );
        watch_list[keep++] = ref;
      }
      watch_list.resize( keep );
    }
    return -1;
  }

  void analyze( int conflict, std::vector<int>& learnt, int& backtrack_level )
  {
    learnt.clear();
    learnt.push_back( 0 ); // placeholder for the asserting literal
    int counter = 0;
    int lit = -1;
    size_t trail_pos = trail_.size();
    int ref = conflict;
    ++stamp_;

    do
    {
      auto& c = clauses_[ref];
      if ( c.learnt )
      {
        c.activity += clause_bump_;
      }
      for ( size_t i = ( lit == -1 ? 0 : 1 ); i < c.lits.size(); ++i )
      {
        int const q = ( lit == -1 ) ? c.lits[i] : ( c.lits[i] == ( lit ^ 1 ) ? -1 : c.lits[i] );
        if ( q == -1 )
        {
          continue;
        }
        int const v = var( q );
        if ( seen_[v] == stamp_ || levels_[v] == 0 )
        {
          continue;
        }
        seen_[v] = stamp_;
        bump_activity( v );
        if ( levels_[v] >= decision_level() )
        {
          ++counter;
        }
        else
        {
          learnt.push_back( q );
        }
      }
      // pick the next literal from the trail
      while ( seen_[var( trail_[trail_pos - 1] )] != stamp_ )
      {
        --trail_pos;
      }
      --trail_pos;
      lit = trail_[trail_pos];
      ref = reasons_[var( lit )];
      seen_[var( lit )] = 0;
      --counter;
    } while ( counter > 0 );
    learnt[0] = lit ^ 1;

    // recursive minimization: drop literals implied by the rest
    std::vector<int> minimized;
    minimized.push_back( learnt[0] );
    for ( size_t i = 1; i < learnt.size(); ++i )
    {
      if ( !redundant( learnt[i] ) )
      {
        minimized.push_back( learnt[i] );
      }
    }
    learnt = std::move( minimized );

    backtrack_level = 0;
    if ( learnt.size() > 1 )
    {
      size_t max_i = 1;
      for ( size_t i = 2; i < learnt.size(); ++i )
      {
        if ( levels_[var( learnt[i] )] > levels_[var( learnt[max_i] )] )
        {
          max_i = i;
        }
      }
      std::swap( learnt[1], learnt[max_i] );
      backtrack_level = levels_[var( learnt[1] )];
    }
    bump_clause_activity();
  }

  /*! \brief A literal is redundant when its reason clause is fully marked. */
  bool redundant( int lit )
  {
    int const v = var( lit );
    if ( reasons_[v] == -1 )
    {
      return false;
    }
    for ( int q : clauses_[reasons_[v]].lits )
    {
      int const u = var( q );
      if ( u == v || levels_[u] == 0 )
      {
        continue;
      }
      if ( seen_[u] != stamp_ )
      {
        return false;
      }
    }
    return true;
  }

  void backtrack( int level )
  {
    if ( decision_level() <= level )
    {
      if ( level < static_cast<int>( assumption_level_ ) )
      {
        assumption_level_ = level;
      }
      return;
    }
    for ( size_t i = trail_.size(); i > static_cast<size_t>( trail_lim_[level] ); --i )
    {
      int const lit = trail_[i - 1];
      phase_[var( lit )] = ( assigns_[var( lit )] == 1 );
      assigns_[var( lit )] = -1;
      reasons_[var( lit )] = -1;
      heap_insert( var( lit ) );
    }
    trail_.resize( trail_lim_[level] );
    trail_lim_.resize( level );
    qhead_ = trail_.size();
    if ( level < static_cast<int>( assumption_level_ ) )
    {
      assumption_level_ = level;
    }
  }

  int pick_branch()
  {
    while ( !heap_.empty() )
    {
      int const v = heap_pop();
      if ( assigns_[v] == -1 )
      {
        return 2 * v + ( phase_[v] ? 0 : 1 );
      }
    }
    return -1;
  }

  void bump_activity( int v )
  {
    activity_[v] += var_bump_;
    if ( activity_[v] > 1e100 )
    {
      for ( auto& a : activity_ )
      {
        a *= 1e-100;
      }
      var_bump_ *= 1e-100;
    }
    heap_update( v );
  }

  void decay_activities() { var_bump_ /= 0.95; }

  void bump_clause_activity()
  {
    clause_bump_ /= 0.999;
    if ( clause_bump_ > 1e100 )
    {
      for ( int ref : learnts_ )
      {
        clauses_[ref].activity *= 1e-100;
      }
      clause_bump_ *= 1e-100;
    }
  }

  void reduce_learnts()
  {
    std::vector<int> keep_refs;
    std::vector<int> sorted = learnts_;
    std::sort( sorted.begin(), sorted.end(), [&]( int a, int b ) {
      auto const& ca = clauses_[a];
      auto const& cb = clauses_[b];
      return ca.lbd != cb.lbd ? ca.lbd < cb.lbd : ca.activity > cb.activity;
    } );
    std::vector<bool> drop( clauses_.size(), false );
    for ( size_t i = sorted.size() / 2; i < sorted.size(); ++i )
    {
      auto const& c = clauses_[sorted[i]];
      if ( c.lbd <= 2 || c.lits.size() <= 2 || is_reason( sorted[i] ) )
      {
        continue;
      }
      drop[sorted[i]] = true;
    }
    // detach dropped clauses
    for ( auto& wl : watches_ )
    {
      size_t keep = 0;
      for ( int ref : wl )
      {
        if ( !drop[ref] )
        {
          wl[keep++] = ref;
        }
      }
      wl.resize( keep );
    }
    size_t keep = 0;
    for ( int ref : learnts_ )
    {
      if ( !drop[ref] )
      {
        learnts_[keep++] = ref;
      }
      else
      {
        clauses_[ref].lits.clear();
      }
    }
    learnts_.resize( keep );
  }

  bool is_reason( int ref ) const
  {
    auto const& c = clauses_[ref];
    return !c.lits.empty() && reasons_[var( c.lits[0] )] == ref &&
           assigns_[var( c.lits[0] )] != -1;
  }

  bool verify_model() const
  {
    for ( auto const& c : clauses_ )
    {
      if ( c.lits.empty() )
      {
        continue; // reduced away
      }
      bool satisfied = false;
      for ( int l : c.lits )
      {
        satisfied = satisfied || value( l ) == 1;
      }
      if ( !satisfied )
      {
        return false;
      }
    }
    return true;
  }

  static uint64_t luby( uint64_t i )
  {
    // the Luby sequence 1 1 2 1 1 2 4 ...
    uint64_t k = 1;
    while ( ( ( 1ull << k ) - 1 ) < i )
    {
      ++k;
    }
    while ( ( ( 1ull << k ) - 1 ) != i )
    {
      i -= ( 1ull << ( k - 1 ) ) - 1;
      k = 1;
      while ( ( ( 1ull << k ) - 1 ) < i )
      {
        ++k;
      }
    }
    return 1ull << ( k - 1 );
  }

  // indexed max-heap on variable activity
  void heap_insert( int v )
  {
    if ( heap_index_[v] != -1 )
    {
      return;
    }
    heap_index_[v] = static_cast<int>( heap_.size() );
    heap_.push_back( v );
    heap_up( heap_index_[v] );
  }

  int heap_pop()
  {
    int const top = heap_[0];
    heap_index_[top] = -1;
    heap_[0] = heap_.back();
    heap_.pop_back();
    if ( !heap_.empty() )
    {
      heap_index_[heap_[0]] = 0;
      heap_down( 0 );
    }
    return top;
  }

  void heap_update( int v )
  {
    if ( heap_index_[v] != -1 )
    {
      heap_up( heap_index_[v] );
    }
  }

  void heap_up( int i )
  {
    int const v = heap_[i];
    while ( i > 0 )
    {
      int const parent = ( i - 1 ) / 2;
      if ( activity_[heap_[parent]] >= activity_[v] )
      {
        break;
      }
      heap_[i] = heap_[parent];
      heap_index_[heap_[i]] = i;
      i = parent;
    }
    heap_[i] = v;
    heap_index_[v] = i;
  }

  void heap_down( int i )
  {
    int const v = heap_[i];
    int const n = static_cast<int>( heap_.size() );
    while ( true )
    {
      int const left = 2 * i + 1;
      if ( left >= n )
      {
        break;
      }
      int child = left;
      if ( left + 1 < n && activity_[heap_[left + 1]] > activity_[heap_[left]] )
      {
        child = left + 1;
      }
      if ( activity_[v] >= activity_[heap_[child]] )
      {
        break;
      }
      heap_[i] = heap_[child];
      heap_index_[heap_[i]] = i;
      i = child;
    }
    heap_[i] = v;
    heap_index_[v] = i;
  }

  int num_vars_{ 0 };
  bool ok_{ true };
  std::vector<clause> clauses_;
  std::vector<int> learnts_;
  std::vector<std::vector<int>> watches_;
  std::vector<int8_t> assigns_;
  std::vector<int> levels_;
  std::vector<int> reasons_;
  std::vector<int> trail_;
  std::vector<int> trail_lim_;
  size_t qhead_{ 0 };
  uint32_t assumption_level_{ 0 };
  std::vector<double> activity_;
  std::vector<bool> phase_;
  std::vector<uint64_t> seen_;
  uint64_t stamp_{ 0 };
  double var_bump_{ 1.0 };
  double clause_bump_{ 1.0 };
  std::vector<int> heap_;
  std::vector<int> heap_index_;
};

/*! \brief One-shot solve of a CNF formula. */
inline sat_verdict solve_cnf( cnf const& f, sat_budget const& budget = {},
                              std::vector<bool>* model = nullptr )
{
  sat_solver solver;
  solver.add_cnf( f );
  sat_verdict const verdict = solver.solve( {}, budget );
  if ( verdict == sat_verdict::satisfiable && model )
  {
    model->assign( f.num_vars, false );
    for ( int v = 1; v <= f.num_vars; ++v )
    {
      ( *model )[v - 1] = solver.model_value( v );
    }
  }
  return verdict;
}

} // namespace reveal
