(* gniEx: if h then x := any int; if x >= l then return x else loop forever
          else x := l; while nondet-bool do x++ done; return x.
   State starts after the initial choice; b = still running. *)
name gniEx;
vars b : bool, x, h : bool, l;
inputs x, h, l;
outputs x;
ranked x, h, l;
final !b;
trans
  b and h and (x >= l and !b' and x' = x or x < l and b' and x' = x) or
  b and !h and (b' and x' = x + 1 or !b' and x' = x) or
  !b and !b' and x' = x;
branches 2:
  b and h and (x >= l and !b'1 and x'1 = x and !b'2 and x'2 = x or
               x < l and b'1 and x'1 = x and b'2 and x'2 = x) or
  b and !h and (b'1 and x'1 = x + 1 and !b'2 and x'2 = x) or
  !b and !b'1 and x'1 = x and !b'2 and x'2 = x;
diverging h and x < l and x' = x;
