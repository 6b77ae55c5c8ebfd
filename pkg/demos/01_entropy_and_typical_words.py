"""Entropy by word counting, and how many words look like a given measure.

Run: python3 demos/01_entropy_and_typical_words.py
"""
import math
from fractions import Fraction

from satshift.measures import MarkovMeasure
from satshift.separation import certify_uniform_separation, count_words, typical_words
from satshift.shift import ShiftSystem

golden = ShiftSystem.from_matrix([[1, 1], [1, 0]], "golden mean")
full = ShiftSystem.full_shift(2)
log_phi = math.log((1 + 5 ** 0.5) / 2)

print("The golden-mean shift forbids '11'. Its word counts are Fibonacci numbers,")
print("so (1/n) log #words approaches log(phi) from above:")
for n in (4, 8, 16, 32, 64):
    c = count_words(golden, n)
    print(f"  n={n:3d}  #words={c:<16d} (1/n) log = {math.log(c) / n:.6f}   gap to log(phi) = {math.log(c) / n - log_phi:+.6f}")

print("\nTypical words: those whose empirical pair statistics sit within zeta of a target.")
fair = MarkovMeasure.bernoulli([Fraction(1, 2), Fraction(1, 2)])
for zeta in (Fraction(1, 20), Fraction(1, 10), Fraction(1, 5)):
    tw = typical_words(full, fair, zeta, 40)
    print(f"  fair coin, n=40, zeta={zeta}: {tw.exact_count} typical words "
          f"(rate {tw.log_count / 40:.4f} vs log 2 = {math.log(2):.4f})")

print("\nThey are numerous enough: beyond some n*, #typical >= e^(n(h - eta)).")
[rep] = certify_uniform_separation(full, fair, [Fraction(1, 10)], eta=0.1)
print(f"  fair coin, eta=0.1, zeta=1/10: bound holds for every n in [{rep.n_star}, 64]")
parry = MarkovMeasure.parry(golden)
[rep] = certify_uniform_separation(golden, parry, [0.05], eta=0.1)
print(f"  golden-mean Parry measure, eta=0.1, zeta=0.05: n* = {rep.n_star}")
