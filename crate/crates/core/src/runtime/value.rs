use std::collections::BTreeMap;
use std::fmt;
use std::rc::Rc;

/// Identity of a heap instance. Two references are the same object iff
/// their ids are equal.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ObjId(pub usize);

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Value {
    Nil,
    Bool(bool),
    Int(i64),
    /// Strings are values: nothing mutates their text.
    Str(Rc<str>),
    Obj(ObjId),
}

impl Value {
    pub fn str(s: &str) -> Self {
        Value::Str(Rc::from(s))
    }

    pub fn as_obj(&self) -> Option<ObjId> {
        match self {
            Value::Obj(id) => Some(*id),
            _ => None,
        }
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Nil => Ok(()),
            Value::Bool(b) => write!(f, "{b}"),
            Value::Int(n) => write!(f, "{n}"),
            Value::Str(s) => f.write_str(s),
            Value::Obj(id) => write!(f, "#<obj {}>", id.0),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Instance {
    pub class_name: Rc<str>,
    pub ivars: BTreeMap<String, Value>,
    /// Monotonic: never reset once set.
    frozen: bool,
}

impl Instance {
    pub fn new(class_name: Rc<str>) -> Self {
        Instance {
            class_name,
            ivars: BTreeMap::new(),
            frozen: false,
        }
    }

    pub fn is_frozen(&self) -> bool {
        self.frozen
    }

    pub fn freeze(&mut self) {
        self.frozen = true;
    }

    pub fn ivar(&self, name: &str) -> Value {
        self.ivars.get(name).cloned().unwrap_or(Value::Nil)
    }

    /// Shallow copy with a fresh ivar table; the frozen flag is copied too.
    pub fn shallow_clone(&self) -> Instance {
        self.clone()
    }
}

/// Arena of instances, indexed by [`ObjId`].
#[derive(Debug, Clone, Default)]
pub struct Heap {
    objects: Vec<Instance>,
}

impl Heap {
    pub fn alloc(&mut self, inst: Instance) -> ObjId {
        self.objects.push(inst);
        ObjId(self.objects.len() - 1)
    }

    pub fn get(&self, id: ObjId) -> &Instance {
        &self.objects[id.0]
    }

    pub fn get_mut(&mut self, id: ObjId) -> &mut Instance {
        &mut self.objects[id.0]
    }

    pub fn len(&self) -> usize {
        self.objects.len()
    }

    pub fn is_empty(&self) -> bool {
        self.objects.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (ObjId, &Instance)> {
        self.objects.iter().enumerate().map(|(i, o)| (ObjId(i), o))
    }
}
