"""Rule schemas of the built-in constructions, one entry per rule family.

Generators in :mod:`orderpp.constructions` and :mod:`orderpp.tm` emit one
concrete rule per instantiation of a schema's side condition and label it with
the schema's key, so a trace can be matched back to this table.

Notation: ``x ->P y`` is a rule guarded by predicate P (true, lt, succ);
``_`` means "left unchanged"; T/F are the opinions.
"""

ORDERED = {
    "misorder": "(x,T),(y,o) ->lt (x,F),(y,o)   for x > y",
    "reset": "(x,F),(y,o) ->true (x,T),(y,o)",
}

# agent state: (current input, last input, belief); ``a`` is the counted letter
EXACTLY_ONE = {
    "(1)": "(s,a,o),q ->true (s,s,F),q            for s != a",
    "(2)": "(a,s,o),q ->true (a,a,T),q",
    "(3)": "(s,s,o),(a,a,T) ->true (s,s,T),(a,a,T) for s != a",
    "(4)": "(s,s,o),(t,t,F) ->true (s,s,F),(t,t,F)",
    "(5)": "(a,a,o),(a,a,o') ->true (a,a,F),(a,a,o')",
}

# agent state: (plus state, minus state, belief)
DECIDER = {
    "sim+": "one step of the plus protocol on the first component",
    "sim-": "one step of the minus protocol on the second component",
    "flip": "(p,m,s),(p',m',s') ->true (p,m,s'),(p',m',s') for s != s'",
    "self-flip": "(p,m,s),q ->true (p,m,-s),q if the trusted component has opinion F",
}

UNION = {
    "switch": "(g,q1,q2,i),(g',q1',q2',i') ->true (g,q1,q2,3-i),(g',...) "
              "if i != i' or O_i(q_i) = F or O_i(q_i') = F",
}

RENAME = {
    "revise": "(g,q),(g',q') ->true (g,init(s)),(g',q') for g in f(s), if O(q) = F or O(q') = F",
}

HANDSHAKE = {
    "mark": "a,b ->succ a^d,b",
    "ack": "a^d,b ->succ a^d,b^ack",
    "commit": "a^d,b^ack ->succ c,b^ack",
    "finish": "c,b^ack ->succ c,d",
    "drop-mark": "a^d,x ->succ a,x       for x != b^ack",
    "drop-ack": "y,b^ack ->succ y,d      for y != a^d",
}

EMPTINESS = {
    "unbar": "(a.bar,q) ->true (a,q)",
    "collapse": "(q1,q2) ->true (q1,sink) if O(q1) = F or O(q2) = F",
}

# agent state: (input x, acting-as y, cell z, belief o); cells are (head, symbol, position)
TM = {
    "(1)": "(_,_,(p,a,_),_),(_,_,(-,_,_),_) ->succ (_,_,(-,b,_),_),(_,_,(q,_,_),_)  for (p,a)->(q,b,R)",
    "(2)": "(_,_,(-,_,_),_),(_,_,(p,a,_),_) ->succ (_,_,(q,_,_),_),(_,_,(-,b,_),_)  for (p,a)->(q,b,L)",
    "(3)": "(x,_,(p,a,_),_) ->true (x,_,(q,b,_),_)  for (p,a)->(q,b,R), pos(x) = lst",
    "(4)": "(x,_,(p,a,_),_) ->true (x,_,(q,b,_),_)  for (p,a)->(q,b,L), pos(x) = fst",
    "(5)": "(x,_,_,_),(x',_,z',_) ->true (x,_,_,T),(x',_,z',_)  if pos(x)=fst, pos(x')=lst, head(z')=accept",
    "(6)": "(_,_,_,T),(_,_,_,_) ->succ (_,_,_,T),(_,_,_,T)",
    "(7)": "(x,y,_,_),(x',y',_,_) ->true (x,y,_,_),(x',y',_,G)  if pos(x')=lst and (x != y or x' != y')",
    "(8)": "(_,_,_,_),(x',_,_,G) ->succ (_,_,_,G),(x',x',x',F)",
    "(9)": "(x,_,_,G) ->true (x,x,x,F)  if pos(x) = fst",
    "(10)": "(x,_,_,_),(x',_,_,_) ->true (x,_,_,_),(x',_,_,F)  if head(x), head(x') are machine states",
    "(11)": "(x,_,_,_),(x',_,_,_) ->true (x,_,_,_),(x',_,_,F)  if pos(x) = pos(x') in {fst, lst}",
    "(12)": "(x,_,_,_),(x',_,_,_) ->succ (x,_,_,F),(x',_,_,F)  if pos(x) = lst or pos(x') = fst",
}
